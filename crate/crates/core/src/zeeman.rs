//! Zeeman resonances of ions in a linear magnetic field profile and the
//! addressing figures of merit derived from them.

use serde::Serialize;

use crate::constants::BOHR_MAGNETON_HZ_PER_TESLA;
use crate::error::{invalid, Error, Result};
use crate::ion_chain::{equilibrium_positions, min_adjacent_separation, ChainGeometry, IonSpecies, TrapConfig};
use crate::scalar::Real;

/// Default per-neighbor crosstalk below which ions count as distinguishable.
pub const DEFAULT_CROSSTALK_THRESHOLD: f64 = 0.01;

/// A magnetic dipole transition Δm_J = ±1 within a level of Landé factor g_J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeemanTransition<T> {
    pub lande_g: T,
    pub delta_mj: i8,
}

impl<T: Real> ZeemanTransition<T> {
    pub fn new(lande_g: T, delta_mj: i8) -> Result<Self> {
        let t = Self { lande_g, delta_mj };
        t.validate()?;
        Ok(t)
    }

    /// Δm = +1 transition inside the D3/2 manifold (g_J = 0.8).
    pub fn d3_2() -> Self {
        Self { lande_g: T::lit(crate::constants::LANDE_G_D3_2), delta_mj: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta_mj.abs() != 1 {
            return invalid(format!("magnetic dipole transitions need |Δm_J| = 1, got {}", self.delta_mj));
        }
        if self.lande_g == T::zero() || !self.lande_g.is_finite() {
            return invalid("Landé g-factor must be finite and non-zero");
        }
        Ok(())
    }

    /// Resonance frequency per unit field, Hz/T.
    fn hz_per_tesla(&self) -> T {
        self.lande_g.abs() * T::lit(BOHR_MAGNETON_HZ_PER_TESLA)
    }
}

/// `B(z) = offset + z · gradient`, in tesla and tesla/meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldProfile<T> {
    pub offset: T,
    pub gradient: T,
}

impl<T: Real> FieldProfile<T> {
    pub fn new(offset: T, gradient: T) -> Self {
        Self { offset, gradient }
    }

    pub fn field_at(&self, z: T) -> T {
        self.offset + z * self.gradient
    }
}

fn is_half_integer<T: Real>(x: T) -> bool {
    let twice = x * T::lit(2.0);
    twice == twice.round()
}

/// Landé g-factor `1 + [J(J+1) + S(S+1) − L(L+1)] / [2J(J+1)]`.
pub fn lande_g<T: Real>(l: u32, s: T, j: T) -> Result<T> {
    let lf = T::from_usize_lossy(l as usize);
    if !(s >= T::zero()) || !is_half_integer(s) || !(j > T::zero()) || !is_half_integer(j) {
        return invalid(format!("need half-integer S ≥ 0 and J > 0, got S = {s}, J = {j}"));
    }
    if j < (lf - s).abs() || j > lf + s || (lf + s - j).fract() != T::zero() {
        return invalid(format!("J = {j} is not reachable from L = {l}, S = {s}"));
    }
    let jj = j * (j + T::one());
    let ss = s * (s + T::one());
    let ll = lf * (lf + T::one());
    Ok(T::one() + (jj + ss - ll) / (T::lit(2.0) * jj))
}

/// `f = g_J μ_B B(z) / h` in Hz. The field must be strictly positive at `z`.
pub fn resonance_frequency<T: Real>(field: &FieldProfile<T>, z: T, transition: &ZeemanTransition<T>) -> Result<T> {
    transition.validate()?;
    let b = field.field_at(z);
    if !(b > T::zero()) {
        return Err(Error::FieldSign { position: z.to_f64_lossy(), field: b.to_f64_lossy() });
    }
    Ok(transition.hz_per_tesla() * b)
}

/// Resonance splitting `Δf = g_J μ_B δz ∂_zB / h` of two ions a distance `delta_z` apart.
pub fn frequency_separation<T: Real>(delta_z: T, gradient: T, transition: &ZeemanTransition<T>) -> Result<T> {
    transition.validate()?;
    if !(delta_z > T::zero()) {
        return invalid(format!("ion separation must be positive, got {delta_z} m"));
    }
    if !gradient.is_finite() {
        return invalid("gradient must be finite");
    }
    Ok(transition.hz_per_tesla() * delta_z * gradient)
}

/// Inverse of [`frequency_separation`]: the gradient that splits two ions `delta_z`
/// apart by `delta_f`.
pub fn gradient_from_separation<T: Real>(delta_f: T, delta_z: T, transition: &ZeemanTransition<T>) -> Result<T> {
    transition.validate()?;
    if !(delta_z > T::zero()) {
        return invalid(format!("ion separation must be positive, got {delta_z} m"));
    }
    if !(delta_f >= T::zero()) {
        return invalid(format!("frequency separation must be non-negative, got {delta_f} Hz"));
    }
    Ok(delta_f / (transition.hz_per_tesla() * delta_z))
}

/// Relative Lorentzian response `1 / (1 + (2Δ/Γ)²)` of a line of FWHM Γ at detuning Δ.
pub fn crosstalk<T: Real>(detuning: T, fwhm: T) -> Result<T> {
    if !(fwhm > T::zero()) {
        return invalid(format!("linewidth must be positive, got {fwhm} Hz"));
    }
    let x = T::lit(2.0) * detuning / fwhm;
    Ok(T::one() / (T::one() + x * x))
}

/// Splitting at which a line of FWHM `fwhm` leaks `target` into its neighbour.
pub fn splitting_for_crosstalk<T: Real>(target: T, fwhm: T) -> Result<T> {
    if !(target > T::zero() && target <= T::one()) {
        return invalid(format!("target crosstalk must lie in (0, 1], got {target}"));
    }
    if !(fwhm > T::zero()) {
        return invalid(format!("linewidth must be positive, got {fwhm} Hz"));
    }
    Ok(fwhm / T::lit(2.0) * (T::one() / target - T::one()).sqrt())
}

/// Per-ion resonances and crosstalk of a chain in a given field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AddressingReport<T> {
    pub n_ions: usize,
    /// Ion positions, m.
    pub positions: Vec<T>,
    /// Resonance frequency of each ion, Hz.
    pub frequencies: Vec<T>,
    /// `|f_{i+1} − f_i|`, Hz.
    pub splittings: Vec<T>,
    /// Assumed line FWHM, Hz.
    pub linewidth: T,
    /// Crosstalk onto each right-hand neighbour.
    pub adjacent_crosstalk: Vec<T>,
    /// Crosstalk at the smallest splitting (1 for a single ion or zero gradient).
    pub worst_crosstalk: T,
    pub crosstalk_threshold: T,
    pub distinguishable: bool,
    /// Gradient (T/m) at which the innermost pair reaches `crosstalk_threshold`.
    pub required_gradient: Option<T>,
}

/// Builds the chain, evaluates every ion's resonance independently and reports
/// splittings and crosstalk. `threshold` defaults to [`DEFAULT_CROSSTALK_THRESHOLD`].
pub fn addressability_report<T: Real>(
    species: &IonSpecies<T>,
    trap: &TrapConfig<T>,
    n_ions: usize,
    field: &FieldProfile<T>,
    transition: &ZeemanTransition<T>,
    linewidth: T,
    threshold: Option<T>,
) -> Result<AddressingReport<T>> {
    let chain = equilibrium_positions(species, trap, n_ions)?;
    report_for_chain(&chain, field, transition, linewidth, threshold)
}

/// [`addressability_report`] for an already solved chain.
pub fn report_for_chain<T: Real>(
    chain: &ChainGeometry<T>,
    field: &FieldProfile<T>,
    transition: &ZeemanTransition<T>,
    linewidth: T,
    threshold: Option<T>,
) -> Result<AddressingReport<T>> {
    let threshold = threshold.unwrap_or_else(|| T::lit(DEFAULT_CROSSTALK_THRESHOLD));
    if !(threshold > T::zero() && threshold <= T::one()) {
        return invalid(format!("crosstalk threshold must lie in (0, 1], got {threshold}"));
    }
    crosstalk(T::zero(), linewidth)?;
    let frequencies =
        chain.positions.iter().map(|&z| resonance_frequency(field, z, transition)).collect::<Result<Vec<_>>>()?;
    let splittings: Vec<T> = frequencies.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let adjacent_crosstalk = splittings.iter().map(|&s| crosstalk(s, linewidth)).collect::<Result<Vec<_>>>()?;
    let worst_crosstalk = match splittings.iter().copied().reduce(T::min) {
        Some(min_split) => crosstalk(min_split, linewidth)?,
        None => T::one(),
    };
    let required_gradient = if chain.n_ions >= 2 {
        let needed = splitting_for_crosstalk(threshold, linewidth)?;
        Some(gradient_from_separation(needed, min_adjacent_separation(chain)?, transition)?)
    } else {
        None
    };
    Ok(AddressingReport {
        n_ions: chain.n_ions,
        positions: chain.positions.clone(),
        frequencies,
        splittings,
        linewidth,
        adjacent_crosstalk,
        worst_crosstalk,
        crosstalk_threshold: threshold,
        distinguishable: chain.n_ions >= 2 && worst_crosstalk <= threshold,
        required_gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn d32() -> ZeemanTransition<f64> {
        ZeemanTransition::d3_2()
    }

    #[test]
    fn lande_factors() {
        assert_relative_eq!(lande_g(0, 0.5, 0.5).unwrap(), 2.0);
        assert_relative_eq!(lande_g(2, 0.5, 1.5).unwrap(), 0.8, max_relative = 1e-15);
        assert_relative_eq!(lande_g(1, 0.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(lande_g(1, 0.5, 0.5).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        assert!(lande_g(2, 0.5, 3.5).is_err());
        assert!(lande_g(2, 0.5, 1.0).is_err());
        assert!(lande_g(0, 0.3, 0.3).is_err());
        assert!(lande_g(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn transition_validation() {
        assert!(ZeemanTransition::new(0.8, 2).is_err());
        assert!(ZeemanTransition::new(0.0, 1).is_err());
        assert!(ZeemanTransition::new(0.8, -1).is_ok());
    }

    #[test]
    fn resonance_values() {
        let f = resonance_frequency(&FieldProfile::new(0.67e-3, 0.0), 0.0, &d32()).unwrap();
        // mpmath: 7.50198728573e6 Hz.
        assert_relative_eq!(f, 7.501_987_285_73e6, max_relative = 1e-10);
        let f1 = resonance_frequency(&FieldProfile::new(1.0, 0.0), 0.0, &d32()).unwrap();
        assert_relative_eq!(f1, 1.119_699_594_886e10, max_relative = 1e-10);
        let a = resonance_frequency(&FieldProfile::new(1e-3, 0.0), 0.0, &d32()).unwrap();
        let b = resonance_frequency(&FieldProfile::new(0.5e-3, 0.0), 0.0, &d32()).unwrap();
        assert_relative_eq!(a, 2.0 * b, max_relative = 1e-15);
    }

    #[test]
    fn non_positive_field_rejected() {
        let field = FieldProfile::new(1e-4, 10.0);
        assert!(matches!(resonance_frequency(&field, -1e-5, &d32()), Err(Error::FieldSign { .. })));
        assert!(resonance_frequency(&field, -2e-5, &d32()).is_err());
        assert!(resonance_frequency(&FieldProfile::new(0.0, 0.0), 0.0, &d32()).is_err());
    }

    #[test]
    fn separation_values() {
        let df = frequency_separation(31.7e-6, 0.256, &d32()).unwrap();
        assert_relative_eq!(df, 90_865.861_524_17, max_relative = 1e-10);
        assert_eq!(frequency_separation(31.7e-6, 0.0, &d32()).unwrap(), 0.0);
        let big = frequency_separation(1.7e-6, 100.0, &d32()).unwrap();
        assert_relative_eq!(big, 1_903_489.311_305_9, max_relative = 1e-10);
        assert!(frequency_separation(0.0, 1.0, &d32()).is_err());
    }

    #[test]
    fn gradient_inversion() {
        let g = gradient_from_separation(91e3, 31.7e-6, &d32()).unwrap();
        assert_relative_eq!(g, 0.256_377_913_654_65, max_relative = 1e-10);
        assert_eq!(gradient_from_separation(0.0, 31.7e-6, &d32()).unwrap(), 0.0);
        assert!(gradient_from_separation(1.0, 0.0, &d32()).is_err());
        assert!(gradient_from_separation(-1.0, 1e-6, &d32()).is_err());
        let span = frequency_separation(61.3e-6, 0.24, &d32()).unwrap();
        assert_relative_eq!(span, 164_730.204_399_6, max_relative = 1e-10);
    }

    #[test]
    fn crosstalk_values() {
        assert_relative_eq!(crosstalk(91e3, 49e3).unwrap(), 0.067_586_206_896_551_72, max_relative = 1e-12);
        assert_eq!(crosstalk(0.0, 49e3).unwrap(), 1.0);
        assert_relative_eq!(crosstalk(130e3, 15e3).unwrap(), 0.003_317_360_855_141_91, max_relative = 1e-12);
        assert_eq!(crosstalk(24.5e3, 49e3).unwrap(), 0.5);
        assert!(crosstalk(1.0, 0.0).is_err());
        let s = splitting_for_crosstalk(0.01, 15e3).unwrap();
        assert_relative_eq!(crosstalk(s, 15e3).unwrap(), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn zero_gradient_report_is_degenerate() {
        let r = addressability_report(
            &IonSpecies::yb172(),
            &TrapConfig::axial(36.3e3).unwrap(),
            3,
            &FieldProfile::new(0.67e-3, 0.0),
            &d32(),
            49e3,
            None,
        )
        .unwrap();
        assert!(r.frequencies.iter().all(|&f| f == r.frequencies[0]));
        assert_eq!(r.worst_crosstalk, 1.0);
        assert!(!r.distinguishable);
    }

    #[test]
    fn four_ion_detunings_match_ccd_addressing() {
        // Inner and outer ion detunings relative to the single-ion resonance at 0.24 T/m, 46 kHz.
        let r = addressability_report(
            &IonSpecies::yb172(),
            &TrapConfig::axial(46e3).unwrap(),
            4,
            &FieldProfile::new(0.67e-3, 0.24),
            &d32(),
            49e3,
            None,
        )
        .unwrap();
        let f0 = resonance_frequency(&FieldProfile::new(0.67e-3, 0.24), 0.0, &d32()).unwrap();
        let inner = r.frequencies[2] - f0;
        let outer = r.frequencies[3] - f0;
        assert!((inner - 26.3e3).abs() < 1.5e3, "inner {inner}");
        assert!((outer - 83.2e3).abs() < 2.5e3, "outer {outer}");
        assert!((r.positions[3] - r.positions[0] - 61.3e-6).abs() < 1e-6);
    }
}
