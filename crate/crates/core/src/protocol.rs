//! Monte Carlo of the double-resonance measurement campaign.
//!
//! Each measurement block probes the seven-point schedule for one variable
//! detuning Δ, repeated `repeats_per_detuning` times. Every probe is one cycle:
//! cooling, a delay, then the rf probe, whose integrated photon counts are
//! Poisson distributed. A recentering scan before each block removes the
//! accumulated drift of the line center up to Gaussian jitter.
//!
//! Random numbers come from `ChaCha8Rng::seed_from_u64(rng_seed)`; counts are
//! drawn with `rand_distr::Poisson` and jitter with `rand_distr::Normal`, in a
//! fixed order (jitter before counts within a cycle). With pinned crate
//! versions this makes campaigns reproducible bit for bit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectrum::{fmt_sig, Spectrum, SpectrumModel};

/// Zero detuning: normalisation point.
pub const NORMALIZATION_DETUNING: f64 = 0.0;
/// ±15 kHz: center check.
pub const CENTER_CHECK_DETUNING: f64 = 15e3;
/// ±250 kHz: background.
pub const BACKGROUND_DETUNING: f64 = 250e3;

pub const RECORD_HEADER: &str = "cycle_index,detuning_hz,counts,timestamp_s";
pub const RECENTER_HEADER: &str = "before_cycle,timestamp_s,fitted_center_hz";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Cycle through all seven detunings once per repeat.
    #[default]
    Interleaved,
    /// Finish all repeats of one detuning before moving on.
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    /// rf probe duration, s.
    pub probe_duration: f64,
    /// Cooling period before each probe, s.
    pub cool_duration: f64,
    /// Delay between cooling and probe, s.
    pub pre_probe_delay: f64,
    /// Variable detunings Δ > 0, Hz; one measurement block each.
    pub variable_detunings: Vec<f64>,
    pub repeats_per_detuning: usize,
    pub rng_seed: u64,
    /// Detected count rate for unit model signal, counts/s.
    pub count_rate_scale: f64,
    /// Additive background count rate, counts/s.
    pub background_rate: f64,
    pub ordering: Ordering,
    /// Run the recentering scan before each block.
    pub recenter: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            probe_duration: 0.150,
            cool_duration: 0.100,
            pre_probe_delay: 0.050,
            variable_detunings: vec![46e3],
            repeats_per_detuning: 40,
            rng_seed: 0,
            count_rate_scale: 2e4,
            background_rate: 0.0,
            ordering: Ordering::Interleaved,
            recenter: true,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("probe_duration", self.probe_duration),
            ("cool_duration", self.cool_duration),
            ("pre_probe_delay", self.pre_probe_delay),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be positive, got {v} s"));
            }
        }
        if self.repeats_per_detuning == 0 {
            return invalid("repeats_per_detuning must be at least 1");
        }
        if self.variable_detunings.is_empty() {
            return invalid("at least one variable detuning is required");
        }
        if !(self.count_rate_scale >= 0.0) || !(self.background_rate >= 0.0) {
            return invalid("count rates must be non-negative");
        }
        for &d in &self.variable_detunings {
            seven_point_schedule(d)?;
        }
        Ok(())
    }

    pub fn cycle_duration(&self) -> f64 {
        self.cool_duration + self.pre_probe_delay + self.probe_duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftModel {
    /// Linear drift of the line center, Hz/s.
    pub center_drift_rate: f64,
    /// RMS random-walk step per cycle, Hz; also the recentering residual.
    pub drift_jitter: f64,
}

impl DriftModel {
    pub fn validate(&self) -> Result<()> {
        if !self.center_drift_rate.is_finite() {
            return invalid("drift rate must be finite");
        }
        if !(self.drift_jitter >= 0.0) || !self.drift_jitter.is_finite() {
            return invalid("drift jitter must be non-negative");
        }
        Ok(())
    }
}

/// Probe detunings for one measurement cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SevenPointSchedule {
    /// `[0, +15k, −15k, +250k, −250k, +Δ, −Δ]` in Hz.
    pub detunings: [f64; 7],
    /// Δ coincides with one of the fixed points.
    pub degenerate: bool,
}

pub fn seven_point_schedule(variable_detuning: f64) -> Result<SevenPointSchedule> {
    if !(variable_detuning > 0.0) || !variable_detuning.is_finite() {
        return invalid(format!("variable detuning must be positive, got {variable_detuning} Hz"));
    }
    let d = variable_detuning;
    Ok(SevenPointSchedule {
        detunings: [
            NORMALIZATION_DETUNING,
            CENTER_CHECK_DETUNING,
            -CENTER_CHECK_DETUNING,
            BACKGROUND_DETUNING,
            -BACKGROUND_DETUNING,
            d,
            -d,
        ],
        degenerate: d == CENTER_CHECK_DETUNING || d == BACKGROUND_DETUNING,
    })
}

/// One probe: integrated counts at a detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub cycle_index: u64,
    pub detuning_hz: f64,
    pub counts: u64,
    /// Probe start, s since campaign start.
    pub timestamp_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecenterEvent {
    /// Index of the first cycle after the scan.
    pub before_cycle: u64,
    pub timestamp_s: f64,
    /// Line-center offset found by the scan, Hz.
    pub fitted_center_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RawCampaign {
    pub records: Vec<ProbeRecord>,
    pub recenter_events: Vec<RecenterEvent>,
    pub flags: Vec<String>,
}

struct DriftState<'a> {
    drift: &'a DriftModel,
    jitter: Option<Normal<f64>>,
    offset: f64,
}

impl DriftState<'_> {
    fn advance(&mut self, dt: f64, rng: &mut ChaCha8Rng) {
        self.offset += self.drift.center_drift_rate * dt;
        if let Some(n) = &self.jitter {
            self.offset += n.sample(rng);
        }
    }

    fn recenter(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let found = self.offset;
        self.offset = self.jitter.as_ref().map_or(0.0, |n| n.sample(rng));
        found
    }
}

/// Simulates a full campaign against `truth`, a line model in detuning space
/// (Hz relative to the nominal ion resonance).
pub fn run_campaign(truth: &SpectrumModel<f64>, config: &ProtocolConfig, drift: &DriftModel) -> Result<RawCampaign> {
    config.validate()?;
    drift.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let jitter = if drift.drift_jitter > 0.0 {
        Some(Normal::new(0.0, drift.drift_jitter).map_err(|e| Error::InvalidInput(e.to_string()))?)
    } else {
        None
    };
    let mut state = DriftState { drift, jitter, offset: 0.0 };
    let mut raw = RawCampaign::default();
    let mut t = 0.0;
    let mut cycle: u64 = 0;
    let cycle_dt = config.cycle_duration();

    for &delta in &config.variable_detunings {
        let schedule = seven_point_schedule(delta)?;
        if schedule.degenerate {
            raw.flags.push(format!("variable detuning {delta} Hz coincides with a fixed schedule point"));
        }
        if config.recenter {
            let found = state.recenter(&mut rng);
            raw.recenter_events.push(RecenterEvent { before_cycle: cycle, timestamp_s: t, fitted_center_hz: found });
        }
        let order: Vec<f64> = match config.ordering {
            Ordering::Interleaved => (0..config.repeats_per_detuning).flat_map(|_| schedule.detunings).collect(),
            Ordering::Blocked => {
                schedule.detunings.iter().flat_map(|&d| std::iter::repeat_n(d, config.repeats_per_detuning)).collect()
            }
        };
        for detuning in order {
            let probe_start = t + config.cool_duration + config.pre_probe_delay;
            state.advance(cycle_dt, &mut rng);
            let rate = truth.eval(detuning + state.offset).max(0.0) * config.count_rate_scale + config.background_rate;
            let mean = rate * config.probe_duration;
            let counts = if mean > 0.0 {
                let p = Poisson::new(mean).map_err(|e| Error::InvalidInput(e.to_string()))?;
                p.sample(&mut rng) as u64
            } else {
                0
            };
            raw.records.push(ProbeRecord {
                cycle_index: cycle,
                detuning_hz: detuning,
                counts,
                timestamp_s: probe_start,
            });
            cycle += 1;
            t += cycle_dt;
        }
    }
    Ok(raw)
}

impl RawCampaign {
    pub fn write_records_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{RECORD_HEADER}")?;
        for r in &self.records {
            writeln!(w, "{},{},{},{}", r.cycle_index, fmt_sig(r.detuning_hz), r.counts, fmt_sig(r.timestamp_s))?;
        }
        Ok(())
    }

    pub fn write_recenter_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{RECENTER_HEADER}")?;
        for e in &self.recenter_events {
            writeln!(w, "{},{},{}", e.before_cycle, fmt_sig(e.timestamp_s), fmt_sig(e.fitted_center_hz))?;
        }
        Ok(())
    }

    /// Reads a record file written by [`RawCampaign::write_records_csv`].
    pub fn read_records_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == RECORD_HEADER => {}
            Some((_, Ok(h))) => {
                return Err(Error::Parse { line: 1, message: format!("expected header `{RECORD_HEADER}`, got `{h}`") })
            }
            Some((_, Err(e))) => return Err(e.into()),
            None => return Err(Error::Parse { line: 1, message: "empty file".into() }),
        }
        let mut raw = RawCampaign::default();
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: String| Error::Parse { line: idx + 1, message: m };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(err(format!("expected 4 columns, got {}", f.len())));
            }
            raw.records.push(ProbeRecord {
                cycle_index: f[0].parse().map_err(|e| err(format!("cycle_index: {e}")))?,
                detuning_hz: f[1].parse().map_err(|e| err(format!("detuning_hz: {e}")))?,
                counts: f[2].parse().map_err(|e| err(format!("counts: {e}")))?,
                timestamp_s: f[3].parse().map_err(|e| err(format!("timestamp_s: {e}")))?,
            });
        }
        if raw.records.windows(2).any(|w| w[1].timestamp_s < w[0].timestamp_s) {
            return invalid("records must be ordered in time");
        }
        Ok(raw)
    }
}

/// Background-subtracted, normalised signal at one |Δ|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub abs_detuning_hz: f64,
    pub signal: f64,
    pub sigma: f64,
    pub records: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CenterCheck {
    /// Normalised signal at +15 kHz and −15 kHz.
    pub plus: f64,
    pub minus: f64,
    pub sigma: f64,
    /// `|plus − minus| < 3σ`.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedCampaign {
    /// Sorted by |Δ|; the background point is consumed by the subtraction.
    pub points: Vec<ReducedPoint>,
    /// Mean background counts per probe.
    pub background_counts: f64,
    /// Mean net counts per probe at Δ = 0.
    pub peak_counts: f64,
    pub center_check: Option<CenterCheck>,
}

impl ReducedCampaign {
    /// `(|Δ|, signal, sigma)` as a spectrum with a sigma column.
    pub fn to_spectrum(&self) -> Spectrum<f64> {
        Spectrum {
            frequency: self.points.iter().map(|p| p.abs_detuning_hz).collect(),
            signal: self.points.iter().map(|p| p.signal).collect(),
            sigma: Some(self.points.iter().map(|p| p.sigma).collect()),
        }
    }

    pub fn point(&self, abs_detuning_hz: f64) -> Option<&ReducedPoint> {
        self.points.iter().find(|p| p.abs_detuning_hz == abs_detuning_hz)
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    sum: u64,
    n: usize,
}

impl Tally {
    fn mean(&self) -> f64 {
        self.sum as f64 / self.n as f64
    }

    /// Poisson variance of the mean, `Σ counts / n²`.
    fn var(&self) -> f64 {
        self.sum as f64 / (self.n as f64 * self.n as f64)
    }
}

fn key(x: f64) -> u64 {
    x.to_bits()
}

/// Averages repeats and ±Δ pairs, subtracts the ±250 kHz background and
/// normalises to the net Δ = 0 signal.
///
/// Uncertainties follow from Poisson counting statistics with the background
/// and normalisation terms propagated to first order. The Δ = 0 point is 1 by
/// construction; its sigma is the relative uncertainty of the normalisation.
pub fn reduce_campaign(raw: &RawCampaign) -> Result<ReducedCampaign> {
    if raw.records.is_empty() {
        return invalid("campaign contains no records");
    }
    let mut by_abs: BTreeMap<u64, (f64, Tally)> = BTreeMap::new();
    let mut by_signed: BTreeMap<u64, Tally> = BTreeMap::new();
    for r in &raw.records {
        let a = r.detuning_hz.abs();
        let e = by_abs.entry(key(a)).or_insert((a, Tally::default()));
        e.1.sum += r.counts;
        e.1.n += 1;
        let s = by_signed.entry(key(r.detuning_hz)).or_default();
        s.sum += r.counts;
        s.n += 1;
    }
    let zero =
        by_abs.get(&key(0.0)).map(|e| e.1).ok_or_else(|| Error::InvalidInput("no records at zero detuning".into()))?;
    let bg = by_abs
        .get(&key(BACKGROUND_DETUNING))
        .map(|e| e.1)
        .ok_or_else(|| Error::InvalidInput("no background records at ±250 kHz".into()))?;
    let b = bg.mean();
    let peak = zero.mean() - b;
    if !(peak > 0.0) {
        return Err(Error::Normalization(peak));
    }
    let (var_b, var_z) = (bg.var(), zero.var());

    let mut points: Vec<ReducedPoint> = by_abs
        .values()
        .filter(|(a, _)| *a != BACKGROUND_DETUNING)
        .map(|&(a, t)| {
            if a == 0.0 {
                return ReducedPoint {
                    abs_detuning_hz: 0.0,
                    signal: 1.0,
                    sigma: (var_z + var_b).sqrt() / peak,
                    records: t.n,
                };
            }
            let net = t.mean() - b;
            let r = net / peak;
            // ∂r/∂S = 1/P, ∂r/∂Z = −r/P, ∂r/∂B = (r − 1)/P
            let var = (t.var() + r * r * var_z + (r - 1.0) * (r - 1.0) * var_b) / (peak * peak);
            ReducedPoint { abs_detuning_hz: a, signal: r, sigma: var.sqrt(), records: t.n }
        })
        .collect();
    points.sort_by(|x, y| x.abs_detuning_hz.total_cmp(&y.abs_detuning_hz));

    let center_check = match (by_signed.get(&key(CENTER_CHECK_DETUNING)), by_signed.get(&key(-CENTER_CHECK_DETUNING))) {
        (Some(p), Some(m)) => {
            let plus = (p.mean() - b) / peak;
            let minus = (m.mean() - b) / peak;
            let sigma = (p.var() + m.var()).sqrt() / peak;
            Some(CenterCheck { plus, minus, sigma, passed: (plus - minus).abs() < 3.0 * sigma })
        }
        _ => None,
    };
    Ok(ReducedCampaign { points, background_counts: b, peak_counts: peak, center_check })
}
