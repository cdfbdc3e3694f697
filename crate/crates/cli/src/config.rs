//! Run configuration: one TOML document, every section optional.
//!
//! Units are part of the key names (`_hz`, `_t`, `_t_per_m`, `_m`, `_per_s`).
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use ion_addressing::double_resonance::KappaConvention;
use ion_addressing::fitting::SidebandKind;
use ion_addressing::protocol::{DriftModel, ProtocolConfig};
use serde::Deserialize;

/// Bad configuration or input data, detected before any computation.
#[derive(Debug, thiserror::Error)]
#[error("{0:#}")]
pub struct ConfigError(pub anyhow::Error);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for stochastic commands; overrides `protocol.rng_seed`.
    pub seed: Option<u64>,
    pub output: OutputConfig,
    pub species: SpeciesConfig,
    pub trap: TrapSection,
    pub chain: ChainSection,
    pub field: FieldSection,
    pub transition: TransitionSection,
    pub addressing: AddressingSection,
    pub line: LineSection,
    pub sidebands: SidebandSection,
    pub grid: GridSection,
    pub protocol: ProtocolConfig,
    pub drift: DriftModel,
    pub fit: FitSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: Format::Csv }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeciesConfig {
    pub mass_amu: f64,
    pub charge: u32,
}

impl Default for SpeciesConfig {
    fn default() -> Self {
        Self { mass_amu: ion_addressing::constants::YB172_MASS_AMU, charge: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapSection {
    pub axial_frequency_hz: f64,
    pub radial_frequency_hz: Option<f64>,
}

impl Default for TrapSection {
    fn default() -> Self {
        Self { axial_frequency_hz: 36.3e3, radial_frequency_hz: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSection {
    pub n_ions: usize,
}

impl Default for ChainSection {
    fn default() -> Self {
        Self { n_ions: 2 }
    }
}

/// Field `B(z) = offset_t + gradient · z`. The gradient is either given
/// directly or inferred from a measured splitting of the two innermost ions.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSection {
    pub offset_t: f64,
    pub gradient_t_per_m: Option<f64>,
    pub measured_splitting_hz: Option<f64>,
    /// Separation belonging to `measured_splitting_hz`; defaults to the solved
    /// separation of the central pair.
    pub measured_separation_m: Option<f64>,
}

impl Default for FieldSection {
    fn default() -> Self {
        Self { offset_t: 0.67e-3, gradient_t_per_m: None, measured_splitting_hz: None, measured_separation_m: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionSection {
    pub lande_g: f64,
    pub delta_mj: i8,
}

impl Default for TransitionSection {
    fn default() -> Self {
        Self { lande_g: ion_addressing::constants::LANDE_G_D3_2, delta_mj: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AddressingSection {
    pub linewidth_hz: f64,
    pub crosstalk_threshold: Option<f64>,
}

impl Default for AddressingSection {
    fn default() -> Self {
        Self { linewidth_hz: 49e3, crosstalk_threshold: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LineSection {
    Lorentzian {
        fwhm_hz: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Rate {
        rf_pump_rate_per_s: f64,
        repump_rate_per_s: f64,
        carrier_fwhm_hz: f64,
        #[serde(default = "one")]
        scale: f64,
        branching: Option<[f64; 4]>,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for LineSection {
    fn default() -> Self {
        LineSection::Lorentzian { fwhm_hz: 49e3, amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SidebandSection {
    pub enabled: bool,
    pub mean_phonon: f64,
    /// Taken as given when set; otherwise computed from the gradient.
    pub eta_eff: Option<f64>,
    pub kappa_convention: KappaConvention,
    pub eta_optical: f64,
    /// Defaults to `trap.axial_frequency_hz`.
    pub trap_frequency_hz: Option<f64>,
}

impl Default for SidebandSection {
    fn default() -> Self {
        Self {
            enabled: false,
            mean_phonon: 6.9e4,
            eta_eff: None,
            kappa_convention: KappaConvention::Ordinary,
            eta_optical: 0.0,
            trap_frequency_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
    /// Grid values are detunings from the resonance at the trap center.
    pub relative: bool,
    pub baseline: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { start_hz: -250e3, stop_hz: 250e3, points: 501, relative: true, baseline: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitSection {
    pub components: usize,
    pub compare: Option<[usize; 2]>,
    pub folded: bool,
    pub q_threshold: f64,
    pub max_iterations: usize,
    /// Constant per-point sigma for data files without a sigma column.
    pub sigma: Option<f64>,
    /// `[component index, center_hz]` pairs held fixed.
    pub fixed_centers: Vec<(usize, f64)>,
    pub thermometry: Option<ThermometrySection>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            components: 1,
            compare: None,
            folded: false,
            q_threshold: ion_addressing::fitting::DEFAULT_Q_THRESHOLD,
            max_iterations: 500,
            sigma: None,
            fixed_centers: Vec::new(),
            thermometry: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermometrySection {
    pub eta_eff: f64,
    pub trap_frequency_hz: f64,
    #[serde(default = "unresolved")]
    pub sideband_kind: SidebandKind,
    #[serde(default)]
    pub carrier_index: usize,
    #[serde(default = "first_sideband")]
    pub sideband_index: usize,
}

fn unresolved() -> SidebandKind {
    SidebandKind::Unresolved
}

fn first_sideband() -> usize {
    1
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Checks that do not need any computation. Physical validity is checked
    /// again by the library when the values are used.
    pub fn validate(&self) -> Result<()> {
        if self.field.gradient_t_per_m.is_some() && self.field.measured_splitting_hz.is_some() {
            bail!("field: give either gradient_t_per_m or measured_splitting_hz, not both");
        }
        if self.field.measured_separation_m.is_some() && self.field.measured_splitting_hz.is_none() {
            bail!("field: measured_separation_m requires measured_splitting_hz");
        }
        if self.chain.n_ions == 0 {
            bail!("chain: n_ions must be at least 1");
        }
        if self.fit.components == 0 {
            bail!("fit: components must be at least 1");
        }
        if let Some([a, b]) = self.fit.compare {
            if a == 0 || b == 0 {
                bail!("fit: compare entries must be at least 1");
            }
        }
        if let Some(s) = self.fit.sigma {
            if !(s > 0.0 && s.is_finite()) {
                bail!("fit: sigma must be positive, got {s}");
            }
        }
        self.protocol.validate()?;
        self.drift.validate()?;
        Ok(())
    }

    /// Seed for stochastic commands: explicit override, then `seed`, then `protocol.rng_seed`.
    pub fn effective_seed(&self, override_seed: Option<u64>) -> u64 {
        override_seed.or(self.seed).unwrap_or(self.protocol.rng_seed)
    }
}
