//! rf-optical double resonance in the D3/2 Zeeman manifold.
//!
//! Four sublevels m = −3/2, −1/2, +1/2, +3/2 (indices 0..4). The rf field moves
//! population between Δm = ±1 neighbours at a rate with a Lorentzian detuning
//! profile; the π-polarised repumper empties m = ±1/2 and returns population
//! to the manifold with configurable branching. Fluorescence is proportional to
//! the m = ±1/2 population. Sidebands follow from the effective Lamb-Dicke
//! parameter of the gradient coupling.

use serde::Serialize;

use crate::constants::{ATOMIC_MASS_UNIT, BOHR_MAGNETON_HZ_PER_TESLA, HBAR};
use crate::error::{invalid, Result};
use crate::ion_chain::{ChainGeometry, IonSpecies, TrapConfig};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::spectrum::{Lorentzian, Spectrum, SpectrumModel};
use crate::zeeman::{resonance_frequency, FieldProfile, ZeemanTransition};

/// Sublevel populations ordered m = −3/2, −1/2, +1/2, +3/2.
pub type Populations<T> = [T; 4];

/// Rates of the four-level steady-state model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateParams<T> {
    /// Δm = ±1 transfer rate on resonance, 1/s.
    pub rf_pump_rate: T,
    /// Depletion rate of m = ±1/2 by the repumper, 1/s.
    pub repump_rate: T,
    /// Fraction of repumped population returning to each sublevel.
    pub branching: Populations<T>,
    /// Phenomenological rf line FWHM, Hz, before repump lifetime broadening.
    pub carrier_fwhm: T,
}

impl<T: Real> RateParams<T> {
    /// Uniform branching over the four sublevels.
    pub fn new(rf_pump_rate: T, repump_rate: T, carrier_fwhm: T) -> Result<Self> {
        let quarter = T::lit(0.25);
        let p = Self { rf_pump_rate, repump_rate, branching: [quarter; 4], carrier_fwhm };
        p.validate()?;
        Ok(p)
    }

    pub fn with_branching(mut self, branching: Populations<T>) -> Result<Self> {
        self.branching = branching;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rf_pump_rate >= T::zero()) || !(self.repump_rate >= T::zero()) {
            return invalid("rates must be non-negative");
        }
        if !self.rf_pump_rate.is_finite() || !self.repump_rate.is_finite() {
            return invalid("rates must be finite");
        }
        if !(self.carrier_fwhm > T::zero()) {
            return invalid(format!("carrier FWHM must be positive, got {} Hz", self.carrier_fwhm));
        }
        if self.branching.iter().any(|&b| !(b >= T::zero())) {
            return invalid("branching fractions must be non-negative");
        }
        let sum = self.branching.iter().fold(T::zero(), |a, &b| a + b);
        if (sum - T::one()).abs() > T::tolerance(1e-12, 16.0) {
            return invalid(format!("branching fractions must sum to 1, got {sum}"));
        }
        Ok(())
    }

    /// FWHM of the rf detuning profile: the phenomenological width plus the
    /// lifetime broadening `repump_rate / 2π` of the depleted m = ±1/2 levels.
    pub fn effective_fwhm(&self) -> T {
        self.carrier_fwhm + self.repump_rate / T::TAU()
    }

    /// rf transfer rate at `detuning` Hz.
    pub fn rf_rate(&self, detuning: T) -> T {
        let x = T::lit(2.0) * detuning / self.effective_fwhm();
        self.rf_pump_rate / (T::one() + x * x)
    }
}

/// Generator `M` of `dp/dt = M p` at the given detuning.
pub fn rate_matrix<T: Real>(params: &RateParams<T>, detuning: T) -> Matrix<T> {
    let mut m = Matrix::zeros(4);
    let mut add = |from: usize, to: usize, rate: T| {
        if from != to && rate > T::zero() {
            m[(to, from)] = m[(to, from)] + rate;
            m[(from, from)] = m[(from, from)] - rate;
        }
    };
    let rf = params.rf_rate(detuning);
    for i in 0..3 {
        add(i, i + 1, rf);
        add(i + 1, i, rf);
    }
    for from in [1, 2] {
        for to in 0..4 {
            add(from, to, params.repump_rate * params.branching[to]);
        }
    }
    m
}

/// Stationary populations plus a flag for the all-zero generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState<T> {
    pub populations: Populations<T>,
    /// Set when no rate is active and the initial distribution is returned unchanged.
    pub degenerate: bool,
}

/// Steady state starting from a uniform distribution. See [`steady_state_from`].
pub fn steady_state_populations<T: Real>(params: &RateParams<T>, detuning: T) -> Result<SteadyState<T>> {
    steady_state_from(params, detuning, &[T::lit(0.25); 4])
}

/// Long-time limit of the rate equations.
///
/// With a non-zero rf rate the generator is irreducible and the unique null
/// vector is returned. Without rf, m = ±3/2 are absorbing and the limit
/// depends on `initial`: population in m = ±1/2 drains into the dark states in
/// proportion to their branching fractions.
pub fn steady_state_from<T: Real>(
    params: &RateParams<T>,
    detuning: T,
    initial: &Populations<T>,
) -> Result<SteadyState<T>> {
    params.validate()?;
    if initial.iter().any(|&p| !(p >= T::zero())) {
        return invalid("initial populations must be non-negative");
    }
    let total = initial.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) {
        return invalid("initial populations must not all vanish");
    }
    let init = initial.map(|p| p / total);
    let rf = params.rf_rate(detuning);
    if rf > T::zero() {
        let mut m = rate_matrix(params, detuning);
        // Rates in units of the fastest one, so the normalisation row is commensurate.
        let fastest = (0..4).fold(T::zero(), |acc, i| acc.max(-m[(i, i)]));
        for i in 0..3 {
            for j in 0..4 {
                m[(i, j)] = m[(i, j)] / fastest;
            }
        }
        for j in 0..4 {
            m[(3, j)] = T::one();
        }
        if let Ok(p) = m.solve(&[T::zero(), T::zero(), T::zero(), T::one()]) {
            let p = [p[0], p[1], p[2], p[3]].map(|x| x.max(T::zero()));
            let s = p.iter().fold(T::zero(), |a, &b| a + b);
            return Ok(SteadyState { populations: p.map(|x| x / s), degenerate: false });
        }
        // rf rate negligible against repumping: fall through to the dark-state limit.
    }
    let dark = params.branching[0] + params.branching[3];
    if params.repump_rate == T::zero() || dark == T::zero() {
        return Ok(SteadyState { populations: init, degenerate: rf == T::zero() && params.repump_rate == T::zero() });
    }
    let bright = init[1] + init[2];
    Ok(SteadyState {
        populations: [
            init[0] + bright * params.branching[0] / dark,
            T::zero(),
            T::zero(),
            init[3] + bright * params.branching[3] / dark,
        ],
        degenerate: false,
    })
}

/// Fluorescence in units of the collection constant: `p(−1/2) + p(+1/2)`.
pub fn fluorescence_signal<T: Real>(params: &RateParams<T>, detuning: T) -> Result<T> {
    let s = steady_state_populations(params, detuning)?;
    Ok(s.populations[1] + s.populations[2])
}

/// Full width at half maximum of the fluorescence profile, Hz, found by bisection.
pub fn fluorescence_fwhm<T: Real>(params: &RateParams<T>) -> Result<T> {
    let peak = fluorescence_signal(params, T::zero())?;
    if !(peak > T::zero()) {
        return invalid("fluorescence profile is identically zero");
    }
    let half = peak * T::lit(0.5);
    let mut hi = params.effective_fwhm();
    let mut guard = 0;
    while fluorescence_signal(params, hi)? > half {
        hi = hi * T::lit(2.0);
        guard += 1;
        if guard > 200 {
            return invalid("fluorescence profile does not fall to half maximum");
        }
    }
    let mut lo = T::zero();
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fluorescence_signal(params, mid)? > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(2.0) * T::lit(0.5) * (lo + hi))
}

/// Extent `√(ħ / 2mω)` of the ground-state wavefunction, m, with ω = 2πν₁.
pub fn wavefunction_extent<T: Real>(species: &IonSpecies<T>, trap: &TrapConfig<T>) -> Result<T> {
    species.validate()?;
    trap.validate()?;
    let hbar_per_amu = T::lit(HBAR / ATOMIC_MASS_UNIT);
    Ok((hbar_per_amu / (T::lit(2.0) * species.mass_amu * trap.axial_angular())).sqrt())
}

/// Optical Lamb-Dicke parameter `η = (2π/λ) √(ħ / 2mω)`.
pub fn lamb_dicke_optical<T: Real>(wavelength: T, species: &IonSpecies<T>, trap: &TrapConfig<T>) -> Result<T> {
    if !(wavelength > T::zero()) {
        return invalid(format!("wavelength must be positive, got {wavelength} m"));
    }
    Ok(T::TAU() / wavelength * wavefunction_extent(species, trap)?)
}

/// How the trap frequency enters the denominator of κ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaConvention {
    /// Divide by ν₁ in Hz.
    #[default]
    Ordinary,
    /// Divide by 2πν₁.
    Angular,
}

/// Gradient coupling `κ = Δz ∂_z f / ν₁`, with `∂_z f = g_J μ_B ∂_zB / h`.
pub fn gradient_coupling<T: Real>(
    species: &IonSpecies<T>,
    trap: &TrapConfig<T>,
    gradient: T,
    transition: &ZeemanTransition<T>,
    convention: KappaConvention,
) -> Result<T> {
    transition.validate()?;
    if !(gradient >= T::zero()) {
        return invalid(format!("gradient magnitude must be non-negative, got {gradient} T/m"));
    }
    let dz = wavefunction_extent(species, trap)?;
    let df_dz = transition.lande_g.abs() * T::lit(BOHR_MAGNETON_HZ_PER_TESLA) * gradient;
    let denom = match convention {
        KappaConvention::Ordinary => trap.axial_frequency,
        KappaConvention::Angular => trap.axial_angular(),
    };
    Ok(dz * df_dz / denom)
}

/// Effective Lamb-Dicke parameter for rf driving, taking the optical η as zero.
pub fn lamb_dicke_effective<T: Real>(
    species: &IonSpecies<T>,
    trap: &TrapConfig<T>,
    gradient: T,
    transition: &ZeemanTransition<T>,
) -> Result<T> {
    lamb_dicke_effective_with(species, trap, gradient, transition, KappaConvention::Ordinary, T::zero())
}

/// `√(η² + κ²)` with an explicit optical η and κ convention.
pub fn lamb_dicke_effective_with<T: Real>(
    species: &IonSpecies<T>,
    trap: &TrapConfig<T>,
    gradient: T,
    transition: &ZeemanTransition<T>,
    convention: KappaConvention,
    eta_optical: T,
) -> Result<T> {
    let kappa = gradient_coupling(species, trap, gradient, transition, convention)?;
    Ok(eta_optical.hypot(kappa))
}

/// Motional sideband parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandParams<T> {
    pub eta_eff: T,
    pub mean_phonon: T,
    /// Axial secular frequency ν₁, Hz.
    pub trap_frequency: T,
}

impl<T: Real> SidebandParams<T> {
    pub fn new(eta_eff: T, mean_phonon: T, trap_frequency: T) -> Result<Self> {
        let s = Self { eta_eff, mean_phonon, trap_frequency };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_eff >= T::zero()) || !(self.mean_phonon >= T::zero()) {
            return invalid("η_eff and ⟨n⟩ must be non-negative");
        }
        if !(self.trap_frequency > T::zero()) {
            return invalid("trap frequency must be positive");
        }
        Ok(())
    }

    /// `a_l / a_0 = ⟨n⟩ η²`.
    pub fn lower_ratio(&self) -> T {
        self.mean_phonon * self.eta_eff * self.eta_eff
    }

    /// `a_u / a_0 = (⟨n⟩ + 1) η²`.
    pub fn upper_ratio(&self) -> T {
        (self.mean_phonon + T::one()) * self.eta_eff * self.eta_eff
    }
}

/// Carrier plus lower (center − ν₁) and upper (center + ν₁) sidebands, all
/// sharing the carrier FWHM. Component order: carrier, lower, upper.
pub fn sideband_model<T: Real>(carrier: &Lorentzian<T>, sb: &SidebandParams<T>) -> Result<SpectrumModel<T>> {
    carrier.validate()?;
    sb.validate()?;
    let a0 = carrier.amplitude;
    SpectrumModel::new(
        vec![
            *carrier,
            Lorentzian {
                center: carrier.center - sb.trap_frequency,
                fwhm: carrier.fwhm,
                amplitude: a0 * sb.lower_ratio(),
            },
            Lorentzian {
                center: carrier.center + sb.trap_frequency,
                fwhm: carrier.fwhm,
                amplitude: a0 * sb.upper_ratio(),
            },
        ],
        T::zero(),
    )
}

/// Per-ion carrier profile as a function of detuning from that ion's resonance.
#[derive(Debug, Clone, PartialEq)]
pub enum LineShape<T> {
    /// Rate-equation fluorescence, multiplied by `scale`.
    Rate { params: RateParams<T>, scale: T },
    /// Lorentzian sum with component centers given relative to the ion's resonance;
    /// the model baseline is ignored.
    Model(SpectrumModel<T>),
}

impl<T: Real> LineShape<T> {
    fn profile(&self, detuning: T) -> Result<T> {
        match self {
            LineShape::Rate { params, scale } => Ok(*scale * fluorescence_signal(params, detuning)?),
            LineShape::Model(m) => Ok(m.components.iter().fold(T::zero(), |acc, c| acc + c.eval(detuning))),
        }
    }
}

/// Resonance frequency of every ion in the chain, Hz.
pub fn ion_resonances<T: Real>(
    chain: &ChainGeometry<T>,
    field: &FieldProfile<T>,
    transition: &ZeemanTransition<T>,
) -> Result<Vec<T>> {
    chain.positions.iter().map(|&z| resonance_frequency(field, z, transition)).collect()
}

/// Noiseless spectrum of a chain on `grid`.
///
/// Each ion contributes its carrier profile `p(f − f_i)` and, with sidebands,
/// `(a_l/a₀) p(f − f_i + ν₁) + (a_u/a₀) p(f − f_i − ν₁)`. Per grid point the sum
/// starts at `baseline` and adds ions in chain order.
pub fn synthesize_spectrum<T: Real>(
    chain: &ChainGeometry<T>,
    field: &FieldProfile<T>,
    transition: &ZeemanTransition<T>,
    line: &LineShape<T>,
    sidebands: Option<&SidebandParams<T>>,
    grid: &[T],
    baseline: T,
) -> Result<Spectrum<T>> {
    if grid.is_empty() {
        return invalid("frequency grid is empty");
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return invalid("frequency grid must be sorted ascending");
    }
    if let Some(sb) = sidebands {
        sb.validate()?;
    }
    let centers = ion_resonances(chain, field, transition)?;
    let mut signal = Vec::with_capacity(grid.len());
    for &f in grid {
        let mut acc = baseline;
        for &fi in &centers {
            acc = acc + ion_contribution(line, sidebands, f - fi)?;
        }
        signal.push(acc);
    }
    Spectrum::new(grid.to_vec(), signal, None)
}

fn ion_contribution<T: Real>(line: &LineShape<T>, sidebands: Option<&SidebandParams<T>>, detuning: T) -> Result<T> {
    let carrier = line.profile(detuning)?;
    match sidebands {
        None => Ok(carrier),
        Some(sb) => {
            let lower = sb.lower_ratio() * line.profile(detuning + sb.trap_frequency)?;
            let upper = sb.upper_ratio() * line.profile(detuning - sb.trap_frequency)?;
            Ok(carrier + lower + upper)
        }
    }
}
