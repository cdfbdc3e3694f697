//! CODATA 2018 physical constants (SI), plus reference species data.
//!
//! All values are exact by definition of the SI or carry at least ten
//! significant digits.

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Atomic mass constant, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Bohr magneton over Planck constant, Hz/T.
pub const BOHR_MAGNETON_HZ_PER_TESLA: f64 = BOHR_MAGNETON / PLANCK;

/// Atomic mass of 172Yb, u.
pub const YB172_MASS_AMU: f64 = 171.936_381_5;

/// Doppler cooling limit quoted for Yb+ on the 369 nm line, K.
pub const YB_DOPPLER_TEMPERATURE: f64 = 470e-6;

/// Landé g-factor of the D3/2 level (L = 2, S = 1/2, J = 3/2).
pub const LANDE_G_D3_2: f64 = 0.8;
