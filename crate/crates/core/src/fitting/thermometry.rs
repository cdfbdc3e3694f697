//! Sideband height ratios, mean phonon number and temperature.
//!
//! Uncertainties are propagated to first order; the effective Lamb-Dicke
//! parameter and trap frequency are taken as exact.

use serde::Serialize;

use crate::constants::{BOLTZMANN, HBAR};
use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

use super::lm::FitResult;

/// Value with one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub sigma: T,
}

impl<T: Real> Estimate<T> {
    pub fn new(value: T, sigma: T) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: T) -> Self {
        Self { value, sigma: T::zero() }
    }
}

/// Which sideband a height ratio refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SidebandKind {
    /// `a_l / a₀ = ⟨n⟩ η²`.
    Lower,
    /// `a_u / a₀ = (⟨n⟩ + 1) η²`.
    Upper,
    /// Large-⟨n⟩ limit `a_l ≈ a_u ≡ a_s`, `⟨n⟩ = (a_s/a₀) / η²`.
    Unresolved,
}

/// Height ratio `a_s / a₀` between two fitted components.
///
/// In a folded fit an off-center component stands for the ± pair averaged
/// onto one side, so its amplitude is `a_l + a_u`; the ratio is halved to give
/// the mean height of a single sideband.
pub fn sideband_ratio<T: Real>(fit: &FitResult<T>, carrier_index: usize, sideband_index: usize) -> Result<Estimate<T>> {
    let n = fit.components.len();
    if carrier_index >= n || sideband_index >= n {
        return invalid(format!("component index out of range (fit has {n} components)"));
    }
    if !fit.converged {
        return invalid("sideband ratio requires a converged fit");
    }
    let a0 = fit.components[carrier_index].amplitude;
    let a1 = fit.components[sideband_index].amplitude;
    if !(a0 > T::zero()) {
        return invalid("carrier amplitude must be positive");
    }
    let pair = if fit.folded && sideband_index != carrier_index && fit.components[sideband_index].center != T::zero() {
        T::lit(0.5)
    } else {
        T::one()
    };
    let ratio = pair * a1 / a0;
    let v00 = fit.amplitude_covariance(carrier_index, carrier_index);
    let v11 = fit.amplitude_covariance(sideband_index, sideband_index);
    let v01 = fit.amplitude_covariance(carrier_index, sideband_index);
    // r = k a₁/a₀: ∂r/∂a₁ = k/a₀, ∂r/∂a₀ = −r/a₀.
    let d1 = pair / a0;
    let d0 = -ratio / a0;
    let var = d1 * d1 * v11 + d0 * d0 * v00 + T::lit(2.0) * d0 * d1 * v01;
    Ok(Estimate::new(ratio, var.max(T::zero()).sqrt()))
}

/// Inverts the sideband amplitude relations for ⟨n⟩.
pub fn mean_phonon_from_ratio<T: Real>(ratio: T, eta_eff: T, kind: SidebandKind) -> Result<T> {
    if !(eta_eff > T::zero()) || !eta_eff.is_finite() {
        return Err(Error::Thermometry(format!("effective Lamb-Dicke parameter must be positive, got {eta_eff}")));
    }
    if !(ratio >= T::zero()) {
        return invalid(format!("sideband ratio must be non-negative, got {ratio}"));
    }
    let x = ratio / (eta_eff * eta_eff);
    Ok(match kind {
        SidebandKind::Lower | SidebandKind::Unresolved => x,
        SidebandKind::Upper => x - T::one(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Temperature<T> {
    pub kelvin: T,
    /// Set for ⟨n⟩ = 0, where T = 0 is returned.
    pub zero_temperature: bool,
}

/// Temperature whose Bose-Einstein occupation at ν₁ equals `mean_phonon`:
/// `T = ħ·2πν₁ / (k_B ln(1 + 1/⟨n⟩))`.
pub fn temperature_from_phonon<T: Real>(mean_phonon: T, trap_frequency: T) -> Result<Temperature<T>> {
    if !(mean_phonon >= T::zero()) {
        return invalid(format!("mean phonon number must be non-negative, got {mean_phonon}"));
    }
    if !(trap_frequency > T::zero()) {
        return invalid(format!("trap frequency must be positive, got {trap_frequency} Hz"));
    }
    if mean_phonon == T::zero() {
        return Ok(Temperature { kelvin: T::zero(), zero_temperature: true });
    }
    let quantum = T::lit(HBAR / BOLTZMANN) * T::TAU() * trap_frequency;
    Ok(Temperature { kelvin: quantum / (T::one() / mean_phonon).ln_1p(), zero_temperature: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermometryResult<T> {
    pub sideband_ratio: Estimate<T>,
    pub mean_phonon: Estimate<T>,
    /// Kelvin.
    pub temperature: Estimate<T>,
    /// High-temperature limit `⟨n⟩ ħω / k_B`, kelvin.
    pub temperature_classical: T,
    pub zero_temperature: bool,
}

/// Sideband ratio → ⟨n⟩ → temperature, with first-order error propagation.
pub fn thermometry<T: Real>(
    ratio: Estimate<T>,
    eta_eff: T,
    kind: SidebandKind,
    trap_frequency: T,
) -> Result<ThermometryResult<T>> {
    let n = mean_phonon_from_ratio(ratio.value, eta_eff, kind)?.max(T::zero());
    let n_sigma = ratio.sigma / (eta_eff * eta_eff);
    let t = temperature_from_phonon(n, trap_frequency)?;
    let quantum = T::lit(HBAR / BOLTZMANN) * T::TAU() * trap_frequency;
    let t_sigma = if t.zero_temperature {
        T::zero()
    } else {
        let l = (T::one() / n).ln_1p();
        // dT/dn = (ħω/k_B) / (ln²(1 + 1/n) · n(n + 1))
        quantum / (l * l * n * (n + T::one())) * n_sigma
    };
    Ok(ThermometryResult {
        sideband_ratio: ratio,
        mean_phonon: Estimate::new(n, n_sigma),
        temperature: Estimate::new(t.kelvin, t_sigma),
        temperature_classical: n * quantum,
        zero_temperature: t.zero_temperature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn phonon_inversion() {
        let n = mean_phonon_from_ratio(0.084, 1.1e-3, SidebandKind::Unresolved).unwrap();
        assert_relative_eq!(n, 69_421.487_603_305_78, max_relative = 1e-12);
        assert_eq!(mean_phonon_from_ratio(0.0, 1e-3, SidebandKind::Lower).unwrap(), 0.0);
        assert!(matches!(mean_phonon_from_ratio(0.1, 0.0, SidebandKind::Lower), Err(Error::Thermometry(_))));
        assert!(mean_phonon_from_ratio(-0.1, 1e-3, SidebandKind::Lower).is_err());
    }

    #[test]
    fn temperatures() {
        // mpmath: 0.152329078879 K at ⟨n⟩ = 6.9e4, ν₁ = 46 kHz.
        let t = temperature_from_phonon(6.9e4, 46e3).unwrap();
        assert_relative_eq!(t.kelvin, 0.152_329_078_879, max_relative = 1e-9);
        let unit = temperature_from_phonon(1.0 / (std::f64::consts::E - 1.0), 46e3).unwrap();
        assert_relative_eq!(unit.kelvin, HBAR * std::f64::consts::TAU * 46e3 / BOLTZMANN, max_relative = 1e-12);
        let zero = temperature_from_phonon(0.0, 46e3).unwrap();
        assert!(zero.zero_temperature);
        assert_eq!(zero.kelvin, 0.0);
        assert!(temperature_from_phonon(1.0, 0.0).is_err());
    }

    #[test]
    fn doppler_reference_occupation() {
        // Inverse direction: ⟨n⟩ at T_D = 470 µK, 46 kHz is 212.396 (mpmath).
        let t = temperature_from_phonon(212.396_282_600_622_5, 46e3).unwrap();
        assert_relative_eq!(t.kelvin, 470e-6, max_relative = 1e-9);
    }

    #[test]
    fn propagated_uncertainty() {
        let r = thermometry(Estimate::new(0.084, 0.008), 1.1e-3, SidebandKind::Unresolved, 46e3).unwrap();
        assert_relative_eq!(r.mean_phonon.sigma, 0.008 / 1.21e-6, max_relative = 1e-12);
        assert_relative_eq!(r.temperature.sigma / r.temperature.value, 0.008 / 0.084, max_relative = 1e-3);
        assert_relative_eq!(r.temperature_classical, r.temperature.value, max_relative = 1e-4);
    }
}
