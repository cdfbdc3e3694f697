//! Equilibrium geometry of a linear Coulomb crystal in a harmonic axial trap.
//!
//! Positions are solved in the dimensionless form `u_i = z_i / ℓ`, where
//! `ℓ³ = q² / (4πε₀ m ω²)` and `ω = 2πν` is the angular axial secular
//! frequency. In these units the potential energy is
//! `U(u) = Σ u_i²/2 + Σ_{i<j} 1/|u_i − u_j|` and the chain shape is universal.

use serde::Serialize;

use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE, VACUUM_PERMITTIVITY, YB172_MASS_AMU};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Largest chain the solver accepts.
pub const MAX_IONS: usize = 100;
const MAX_NEWTON_ITERATIONS: usize = 500;

/// Ion mass and charge state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IonSpecies<T> {
    /// Mass in atomic mass units.
    pub mass_amu: T,
    /// Charge in units of the elementary charge.
    pub charge: u32,
}

impl<T: Real> IonSpecies<T> {
    pub fn new(mass_amu: T, charge: u32) -> Result<Self> {
        let s = Self { mass_amu, charge };
        s.validate()?;
        Ok(s)
    }

    /// Singly charged 172Yb+.
    pub fn yb172() -> Self {
        Self { mass_amu: T::lit(YB172_MASS_AMU), charge: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass_amu > T::zero()) || !self.mass_amu.is_finite() {
            return invalid(format!("ion mass must be positive, got {} u", self.mass_amu));
        }
        if self.charge < 1 {
            return invalid("ion charge must be at least 1 e");
        }
        Ok(())
    }

    /// Mass in kg.
    pub fn mass_kg(&self) -> T {
        self.mass_amu * T::lit(ATOMIC_MASS_UNIT)
    }
}

/// Secular trap frequencies, ordinary (not angular) frequencies in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapConfig<T> {
    pub axial_frequency: T,
    pub radial_frequency: Option<T>,
}

impl<T: Real> TrapConfig<T> {
    pub fn new(axial_frequency: T, radial_frequency: Option<T>) -> Result<Self> {
        let t = Self { axial_frequency, radial_frequency };
        t.validate()?;
        Ok(t)
    }

    pub fn axial(axial_frequency: T) -> Result<Self> {
        Self::new(axial_frequency, None)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.axial_frequency > T::zero()) || !self.axial_frequency.is_finite() {
            return invalid(format!("axial frequency must be positive, got {} Hz", self.axial_frequency));
        }
        if let Some(radial) = self.radial_frequency {
            if !(radial > self.axial_frequency) {
                return invalid(format!(
                    "radial frequency {radial} Hz must exceed axial frequency {} Hz for a linear chain",
                    self.axial_frequency
                ));
            }
        }
        Ok(())
    }

    /// Axial angular frequency 2πν in rad/s.
    pub fn axial_angular(&self) -> T {
        T::TAU() * self.axial_frequency
    }
}

/// Equilibrium configuration of an `n`-ion chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainGeometry<T> {
    pub n_ions: usize,
    /// Length scale ℓ in meters.
    pub length_scale: T,
    /// Sorted dimensionless positions `u_i`.
    pub dimensionless_positions: Vec<T>,
    /// Physical positions `z_i = ℓ u_i` in meters, relative to the trap center.
    pub positions: Vec<T>,
}

impl<T: Real> ChainGeometry<T> {
    /// Adjacent spacings `z_{i+1} − z_i` in meters.
    pub fn separations(&self) -> Vec<T> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Distance between the outermost ions in meters.
    pub fn span(&self) -> T {
        match (self.positions.first(), self.positions.last()) {
            (Some(&a), Some(&b)) => b - a,
            _ => T::zero(),
        }
    }
}

/// Coulomb-crystal length scale ℓ in meters.
pub fn length_scale<T: Real>(species: &IonSpecies<T>, trap: &TrapConfig<T>) -> Result<T> {
    species.validate()?;
    trap.validate()?;
    // e² / (4πε₀ u), m³/s², folded in f64 so that single precision never forms e².
    let k =
        ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * ATOMIC_MASS_UNIT);
    let q = T::from_usize_lossy(species.charge as usize);
    let omega = trap.axial_angular();
    Ok((T::lit(k) * q * q / (species.mass_amu * omega * omega)).cbrt())
}

/// Gradient of the dimensionless potential, i.e. the force-balance residual
/// `u_m − Σ_{n≠m} sign(u_m − u_n)/(u_m − u_n)²` for every ion.
pub fn force_residual<T: Real>(u: &[T]) -> Vec<T> {
    u.iter()
        .enumerate()
        .map(|(m, &um)| {
            let repulsion = u.iter().enumerate().filter(|&(n, _)| n != m).fold(T::zero(), |acc, (_, &un)| {
                let d = um - un;
                acc + d.signum() / (d * d)
            });
            um - repulsion
        })
        .collect()
}

/// Dimensionless potential energy `Σ u²/2 + Σ_{i<j} 1/|u_i − u_j|`.
pub fn potential_energy<T: Real>(u: &[T]) -> T {
    let half = T::lit(0.5);
    let mut e = u.iter().fold(T::zero(), |acc, &x| acc + half * x * x);
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            e = e + T::one() / (u[i] - u[j]).abs();
        }
    }
    e
}

fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn hessian<T: Real>(u: &[T]) -> Matrix<T> {
    let n = u.len();
    let two = T::lit(2.0);
    let mut h = Matrix::identity(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = two / (u[i] - u[j]).abs().powi(3);
            h[(i, j)] = -c;
            h[(i, i)] = h[(i, i)] + c;
        }
    }
    h
}

fn symmetrize<T: Real>(u: &mut [T]) {
    let n = u.len();
    let half = T::lit(0.5);
    for i in 0..n / 2 {
        let a = half * (u[n - 1 - i] - u[i]);
        u[i] = -a;
        u[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        u[n / 2] = T::zero();
    }
}

fn strictly_increasing<T: Real>(u: &[T]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

/// Minimum-energy dimensionless positions of `n_ions` ions, sorted ascending.
///
/// Damped Newton iteration on ∇U starting from a uniform spread over
/// `[−N^0.56, N^0.56]`. The step is halved until the residual norm drops and
/// the ordering is preserved.
pub fn equilibrium_positions_dimensionless<T: Real>(n_ions: usize) -> Result<Vec<T>> {
    if n_ions == 0 || n_ions > MAX_IONS {
        return invalid(format!("number of ions must be in 1..={MAX_IONS}, got {n_ions}"));
    }
    if n_ions == 1 {
        return Ok(vec![T::zero()]);
    }
    let n = T::from_usize_lossy(n_ions);
    let half_width = n.powf(T::lit(0.56));
    let mut u: Vec<T> =
        (0..n_ions).map(|i| -half_width + T::lit(2.0) * half_width * T::from_usize_lossy(i) / (n - T::one())).collect();
    symmetrize(&mut u);

    let target = T::tolerance(1e-12, 64.0);
    let acceptable = T::lit(1e-9).max(T::epsilon().powf(T::lit(0.6)));
    let mut residual = force_residual(&u);
    let mut res_norm = max_abs(&residual);
    let mut iterations = 0;
    while res_norm >= target && iterations < MAX_NEWTON_ITERATIONS {
        iterations += 1;
        let step = hessian(&u)
            .solve(&residual.iter().map(|&r| -r).collect::<Vec<_>>())
            .map_err(|_| Error::Convergence { iterations, residual: res_norm.to_f64_lossy() })?;
        let mut alpha = T::one();
        let mut improved = false;
        for _ in 0..60 {
            let mut trial: Vec<T> = u.iter().zip(&step).map(|(&x, &s)| x + alpha * s).collect();
            symmetrize(&mut trial);
            if strictly_increasing(&trial) {
                let r = force_residual(&trial);
                let rn = max_abs(&r);
                if rn < res_norm {
                    u = trial;
                    residual = r;
                    res_norm = rn;
                    improved = true;
                    break;
                }
            }
            alpha = alpha * T::lit(0.5);
        }
        if !improved {
            // Round-off floor: no step reduces the residual any further.
            break;
        }
    }
    if res_norm < acceptable {
        Ok(u)
    } else {
        Err(Error::Convergence { iterations, residual: res_norm.to_f64_lossy() })
    }
}

/// Physical equilibrium positions of an `n_ions` chain.
pub fn equilibrium_positions<T: Real>(
    species: &IonSpecies<T>,
    trap: &TrapConfig<T>,
    n_ions: usize,
) -> Result<ChainGeometry<T>> {
    let length_scale = length_scale(species, trap)?;
    let dimensionless_positions = equilibrium_positions_dimensionless::<T>(n_ions)?;
    let positions = dimensionless_positions.iter().map(|&u| u * length_scale).collect();
    Ok(ChainGeometry { n_ions, length_scale, dimensionless_positions, positions })
}

/// Smallest adjacent spacing in meters (the innermost pair of a linear chain).
pub fn min_adjacent_separation<T: Real>(geometry: &ChainGeometry<T>) -> Result<T> {
    if geometry.n_ions < 2 || geometry.positions.len() < 2 {
        return invalid("minimum separation needs at least two ions");
    }
    Ok(geometry.separations().into_iter().fold(T::infinity(), T::min))
}
