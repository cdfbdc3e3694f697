//! Trapped-ion addressing in magnetic field gradients.
//!
//! * [`ion_chain`]: equilibrium positions of a linear Coulomb crystal.
//! * [`zeeman`]: per-ion Zeeman resonances, splittings, crosstalk and gradient requirements.
//! * [`double_resonance`]: four-level rate-equation fluorescence, Lamb-Dicke parameters,
//!   motional sidebands and forward spectra.
//! * [`protocol`]: seeded Monte Carlo of the seven-detuning measurement campaign.
//! * [`fitting`]: Levenberg-Marquardt Lorentzian-sum fits, goodness of fit, model
//!   comparison and sideband thermometry.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`. The measurement simulation is `f64`
//! only.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod double_resonance;
pub mod error;
pub mod fitting;
pub mod ion_chain;
pub mod linalg;
pub mod protocol;
pub mod scalar;
pub mod spectrum;
pub mod zeeman;

pub use error::{Error, Result};
pub use scalar::Real;

pub type IonSpecies = ion_chain::IonSpecies<f64>;
pub type TrapConfig = ion_chain::TrapConfig<f64>;
pub type ChainGeometry = ion_chain::ChainGeometry<f64>;
pub type ZeemanTransition = zeeman::ZeemanTransition<f64>;
pub type FieldProfile = zeeman::FieldProfile<f64>;
pub type AddressingReport = zeeman::AddressingReport<f64>;
pub type RateParams = double_resonance::RateParams<f64>;
pub type SidebandParams = double_resonance::SidebandParams<f64>;
pub type LineShape = double_resonance::LineShape<f64>;
pub type Lorentzian = spectrum::Lorentzian<f64>;
pub type SpectrumModel = spectrum::SpectrumModel<f64>;
pub type Spectrum = spectrum::Spectrum<f64>;
pub type FitOptions = fitting::FitOptions<f64>;
pub type FitResult = fitting::FitResult<f64>;
pub type ThermometryResult = fitting::ThermometryResult<f64>;

pub type IonSpeciesF32 = ion_chain::IonSpecies<f32>;
pub type TrapConfigF32 = ion_chain::TrapConfig<f32>;
pub type SpectrumModelF32 = spectrum::SpectrumModel<f32>;
pub type FitResultF32 = fitting::FitResult<f32>;
