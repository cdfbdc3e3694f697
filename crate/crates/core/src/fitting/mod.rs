//! Nonlinear least-squares fitting of Lorentzian sums, goodness of fit, model
//! comparison and sideband thermometry.

mod gamma;
mod lm;
mod thermometry;

pub use gamma::{gamma_p, gamma_q, goodness_of_fit, ln_gamma};
pub use lm::{
    compare_models, fit_lorentzian_sum, initial_guess, model_gradient, model_value, FitOptions, FitResult,
    FittedComponent, ModelComparison, Verdict, DEFAULT_Q_THRESHOLD,
};
pub use thermometry::{
    mean_phonon_from_ratio, sideband_ratio, temperature_from_phonon, thermometry, Estimate, SidebandKind, Temperature,
    ThermometryResult,
};
