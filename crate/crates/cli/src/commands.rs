use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, Context as _, Result};
use ion_addressing::double_resonance::{
    lamb_dicke_effective_with, sideband_model, synthesize_spectrum, LineShape, RateParams, SidebandParams,
};
use ion_addressing::fitting::{
    compare_models, fit_lorentzian_sum, sideband_ratio, thermometry, FitOptions, FitResult, SidebandKind, Verdict,
};
use ion_addressing::ion_chain::{equilibrium_positions, ChainGeometry, IonSpecies, TrapConfig};
use ion_addressing::protocol::{reduce_campaign, run_campaign, CenterCheck, ProtocolConfig, ReducedPoint};
use ion_addressing::spectrum::{linear_grid, Lorentzian, Spectrum, SpectrumModel};
use ion_addressing::zeeman::{
    gradient_from_separation, report_for_chain, resonance_frequency, FieldProfile, ZeemanTransition,
};
use serde::Serialize;

use crate::config::{ConfigError, Format, LineSection, RunConfig, ThermometrySection};
use crate::output::{Cell, OutputDir, Table};

/// Gradient used when the configuration names neither a gradient nor a measured splitting, T/m.
pub const DEFAULT_GRADIENT: f64 = 0.27;

/// Fit finished but did not converge; the report has been written.
#[derive(Debug, thiserror::Error)]
#[error("fit did not converge after {iterations} iterations (report written to {report})")]
pub struct FitNotConverged {
    pub iterations: usize,
    pub report: String,
}

pub struct Context {
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub format: Format,
    pub out: OutputDir,
}

fn species(c: &RunConfig) -> Result<IonSpecies<f64>> {
    Ok(IonSpecies::new(c.species.mass_amu, c.species.charge)?)
}

fn trap(c: &RunConfig) -> Result<TrapConfig<f64>> {
    Ok(TrapConfig::new(c.trap.axial_frequency_hz, c.trap.radial_frequency_hz)?)
}

fn transition(c: &RunConfig) -> Result<ZeemanTransition<f64>> {
    Ok(ZeemanTransition::new(c.transition.lande_g, c.transition.delta_mj)?)
}

fn chain(c: &RunConfig) -> Result<ChainGeometry<f64>> {
    Ok(equilibrium_positions(&species(c)?, &trap(c)?, c.chain.n_ions)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
enum GradientSource {
    Configured,
    Default,
    MeasuredSplitting,
}

/// Resolves the field gradient, from the measured splitting of the central pair if one is given.
fn field(c: &RunConfig, geometry: &ChainGeometry<f64>) -> Result<(FieldProfile<f64>, GradientSource)> {
    let (gradient, source) = match (c.field.gradient_t_per_m, c.field.measured_splitting_hz) {
        (Some(g), _) => (g, GradientSource::Configured),
        (None, Some(split)) => {
            let separation = match c.field.measured_separation_m {
                Some(d) => d,
                None => {
                    let s = geometry.separations();
                    if s.is_empty() {
                        bail!("field: measured_splitting_hz needs two ions or measured_separation_m");
                    }
                    s[(geometry.n_ions - 2) / 2]
                }
            };
            (gradient_from_separation(split, separation, &transition(c)?)?, GradientSource::MeasuredSplitting)
        }
        (None, None) => (DEFAULT_GRADIENT, GradientSource::Default),
    };
    Ok((FieldProfile::new(c.field.offset_t, gradient), source))
}

#[derive(Serialize)]
struct ChainReport {
    n_ions: usize,
    mass_amu: f64,
    charge: u32,
    axial_frequency_hz: f64,
    length_scale_m: f64,
    positions_m: Vec<f64>,
    dimensionless_positions: Vec<f64>,
    separations_m: Vec<f64>,
    min_separation_m: Option<f64>,
    span_m: f64,
}

pub fn cmd_chain(ctx: &mut Context) -> Result<()> {
    let c = &ctx.config;
    let g = chain(c)?;
    let separations = g.separations();
    let report = ChainReport {
        n_ions: g.n_ions,
        mass_amu: c.species.mass_amu,
        charge: c.species.charge,
        axial_frequency_hz: c.trap.axial_frequency_hz,
        length_scale_m: g.length_scale,
        positions_m: g.positions.clone(),
        dimensionless_positions: g.dimensionless_positions.clone(),
        min_separation_m: separations.iter().copied().reduce(f64::min),
        separations_m: separations.clone(),
        span_m: g.span(),
    };
    if ctx.format == Format::Csv {
        let mut t = Table::new(&["ion", "position_m", "position_dimensionless", "separation_to_next_m"]);
        for i in 0..g.n_ions {
            t.row(&[
                Cell::Int(i as u64),
                Cell::Num(g.positions[i]),
                Cell::Num(g.dimensionless_positions[i]),
                separations.get(i).copied().into(),
            ]);
        }
        ctx.out.write("chain.csv", t.render().as_bytes())?;
    }
    ctx.out.write_json("chain.json", &report)?;
    Ok(())
}

#[derive(Serialize)]
struct AddressReport {
    n_ions: usize,
    field_offset_t: f64,
    gradient_t_per_m: f64,
    gradient_source: GradientSource,
    lande_g: f64,
    delta_mj: i8,
    positions_m: Vec<f64>,
    frequencies_hz: Vec<f64>,
    splittings_hz: Vec<f64>,
    linewidth_hz: f64,
    adjacent_crosstalk: Vec<f64>,
    worst_crosstalk: f64,
    crosstalk_threshold: f64,
    distinguishable: bool,
    required_gradient_t_per_m: Option<f64>,
    warnings: Vec<String>,
}

pub fn cmd_address(ctx: &mut Context) -> Result<()> {
    let c = &ctx.config;
    let g = chain(c)?;
    let (f, source) = field(c, &g)?;
    let tr = transition(c)?;
    let r = report_for_chain(&g, &f, &tr, c.addressing.linewidth_hz, c.addressing.crosstalk_threshold)?;
    let mut warnings = Vec::new();
    if f.gradient == 0.0 && r.n_ions > 1 {
        warnings.push("field gradient is zero: all ions share one resonance frequency".to_string());
    }
    if !r.distinguishable && r.n_ions > 1 {
        warnings.push(format!(
            "worst adjacent crosstalk {:.4} exceeds the threshold {}",
            r.worst_crosstalk, r.crosstalk_threshold
        ));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if ctx.format == Format::Csv {
        let mut t = Table::new(&["ion", "position_m", "frequency_hz", "splitting_to_next_hz", "crosstalk_to_next"]);
        for i in 0..r.n_ions {
            t.row(&[
                Cell::Int(i as u64),
                Cell::Num(r.positions[i]),
                Cell::Num(r.frequencies[i]),
                r.splittings.get(i).copied().into(),
                r.adjacent_crosstalk.get(i).copied().into(),
            ]);
        }
        ctx.out.write("address.csv", t.render().as_bytes())?;
    }
    let report = AddressReport {
        n_ions: r.n_ions,
        field_offset_t: f.offset,
        gradient_t_per_m: f.gradient,
        gradient_source: source,
        lande_g: tr.lande_g,
        delta_mj: tr.delta_mj,
        positions_m: r.positions,
        frequencies_hz: r.frequencies,
        splittings_hz: r.splittings,
        linewidth_hz: r.linewidth,
        adjacent_crosstalk: r.adjacent_crosstalk,
        worst_crosstalk: r.worst_crosstalk,
        crosstalk_threshold: r.crosstalk_threshold,
        distinguishable: r.distinguishable,
        required_gradient_t_per_m: r.required_gradient,
        warnings,
    };
    ctx.out.write_json("address.json", &report)?;
    Ok(())
}

fn line_shape(c: &RunConfig) -> Result<LineShape<f64>> {
    Ok(match &c.line {
        LineSection::Lorentzian { fwhm_hz, amplitude } => {
            LineShape::Model(SpectrumModel::single(0.0, *fwhm_hz, *amplitude)?)
        }
        LineSection::Rate { rf_pump_rate_per_s, repump_rate_per_s, carrier_fwhm_hz, scale, branching } => {
            let mut p = RateParams::new(*rf_pump_rate_per_s, *repump_rate_per_s, *carrier_fwhm_hz)?;
            if let Some(b) = branching {
                p = p.with_branching(*b)?;
            }
            LineShape::Rate { params: p, scale: *scale }
        }
    })
}

fn sidebands(c: &RunConfig, f: &FieldProfile<f64>) -> Result<Option<SidebandParams<f64>>> {
    let s = &c.sidebands;
    if !s.enabled {
        return Ok(None);
    }
    let eta = match s.eta_eff {
        Some(e) => e,
        None => lamb_dicke_effective_with(
            &species(c)?,
            &trap(c)?,
            f.gradient.abs(),
            &transition(c)?,
            s.kappa_convention,
            s.eta_optical,
        )?,
    };
    let nu = s.trap_frequency_hz.unwrap_or(c.trap.axial_frequency_hz);
    Ok(Some(SidebandParams::new(eta, s.mean_phonon, nu)?))
}

#[derive(Serialize)]
struct SpectrumReport {
    relative: bool,
    center_frequency_hz: f64,
    ion_resonances_hz: Vec<f64>,
    eta_eff: Option<f64>,
    frequency_hz: Vec<f64>,
    signal: Vec<f64>,
}

pub fn cmd_spectrum(ctx: &mut Context) -> Result<()> {
    let c = &ctx.config;
    let g = chain(c)?;
    let (f, _) = field(c, &g)?;
    let tr = transition(c)?;
    let line = line_shape(c)?;
    let sb = sidebands(c, &f)?;
    let grid = linear_grid(c.grid.start_hz, c.grid.stop_hz, c.grid.points)?;
    let f0 = if c.grid.relative { resonance_frequency(&f, 0.0, &tr)? } else { 0.0 };
    let absolute: Vec<f64> = grid.iter().map(|d| f0 + d).collect();
    let s = synthesize_spectrum(&g, &f, &tr, &line, sb.as_ref(), &absolute, c.grid.baseline)?;
    let out = Spectrum::new(grid, s.signal, None)?;
    match ctx.format {
        Format::Csv => {
            let mut buf = Vec::new();
            out.write_csv(&mut buf)?;
            ctx.out.write("spectrum.csv", &buf)?;
        }
        Format::Json => {
            let resonances = ion_addressing::double_resonance::ion_resonances(&g, &f, &tr)?;
            let report = SpectrumReport {
                relative: c.grid.relative,
                center_frequency_hz: resonance_frequency(&f, 0.0, &tr)?,
                ion_resonances_hz: resonances,
                eta_eff: sb.map(|s| s.eta_eff),
                frequency_hz: out.frequency,
                signal: out.signal,
            };
            ctx.out.write_json("spectrum.json", &report)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ProtocolReport {
    seed: u64,
    cycles: usize,
    duration_s: f64,
    recenter_events: usize,
    flags: Vec<String>,
    background_counts: f64,
    peak_counts: f64,
    center_check: Option<CenterCheck>,
    points: Vec<ReducedPoint>,
}

pub fn cmd_protocol(ctx: &mut Context) -> Result<()> {
    let c = &ctx.config;
    let carrier = match &c.line {
        LineSection::Lorentzian { fwhm_hz, amplitude } => Lorentzian::new(0.0, *fwhm_hz, *amplitude)?,
        LineSection::Rate { .. } => {
            bail!("protocol: the campaign truth must be a lorentzian line (line.kind = \"lorentzian\")")
        }
    };
    let g = chain(c)?;
    let (f, _) = field(c, &g)?;
    let truth = match sidebands(c, &f)? {
        Some(sb) => sideband_model(&carrier, &sb)?,
        None => SpectrumModel::new(vec![carrier], 0.0)?,
    };
    let seed = c.effective_seed(ctx.seed);
    let config = ProtocolConfig { rng_seed: seed, ..c.protocol.clone() };
    let raw = run_campaign(&truth, &config, &c.drift)?;
    let reduced = reduce_campaign(&raw)?;
    for flag in &raw.flags {
        eprintln!("warning: {flag}");
    }

    let mut buf = Vec::new();
    raw.write_records_csv(&mut buf)?;
    ctx.out.write("protocol_records.csv", &buf)?;
    let mut buf = Vec::new();
    raw.write_recenter_csv(&mut buf)?;
    ctx.out.write("protocol_recenter.csv", &buf)?;
    if ctx.format == Format::Csv {
        let mut buf = Vec::new();
        reduced.to_spectrum().write_csv(&mut buf)?;
        ctx.out.write("reduced.csv", &buf)?;
    }
    let report = ProtocolReport {
        seed,
        cycles: raw.records.len(),
        duration_s: raw.records.len() as f64 * config.cycle_duration(),
        recenter_events: raw.recenter_events.len(),
        flags: raw.flags.clone(),
        background_counts: reduced.background_counts,
        peak_counts: reduced.peak_counts,
        center_check: reduced.center_check,
        points: reduced.points,
    };
    ctx.out.write_json("protocol.json", &report)?;
    Ok(())
}

/// Overrides from the `fit` command line.
#[derive(Debug, Default)]
pub struct FitArgs {
    pub components: Option<usize>,
    pub compare: Option<[usize; 2]>,
    pub folded: bool,
    pub sigma: Option<f64>,
    pub thermometry: bool,
    pub eta_eff: Option<f64>,
    pub trap_hz: Option<f64>,
    pub sideband_kind: Option<SidebandKind>,
}

#[derive(Serialize)]
struct ComponentReport {
    center_hz: f64,
    fwhm_hz: f64,
    amplitude: f64,
    center_err_hz: f64,
    fwhm_err_hz: f64,
    amplitude_err: f64,
    center_fixed: bool,
}

#[derive(Serialize)]
struct ThermometryReport {
    sideband_kind: SidebandKind,
    eta_eff: f64,
    trap_frequency_hz: f64,
    sideband_ratio: f64,
    sideband_ratio_err: f64,
    mean_phonon: f64,
    mean_phonon_err: f64,
    temperature_k: f64,
    temperature_err_k: f64,
    temperature_classical_k: f64,
    zero_temperature: bool,
}

#[derive(Serialize)]
struct Derived {
    splittings_hz: Vec<f64>,
    thermometry: Option<ThermometryReport>,
}

#[derive(Serialize)]
struct FitSummary {
    components: usize,
    chi_square: Option<f64>,
    dof: Option<usize>,
    q_value: Option<f64>,
    converged: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct ComparisonReport {
    components_a: usize,
    components_b: usize,
    verdict: Verdict,
    preferred: Option<usize>,
    q_threshold: f64,
    summary: String,
    fits: Vec<FitSummary>,
}

#[derive(Serialize)]
struct FitReport {
    input: String,
    n_points: usize,
    components: Vec<ComponentReport>,
    baseline: f64,
    baseline_err: f64,
    chi_square: f64,
    dof: usize,
    q_value: f64,
    converged: bool,
    iterations: usize,
    folded: bool,
    gradient_norm: f64,
    warnings: Vec<String>,
    derived: Derived,
    comparison: Option<ComparisonReport>,
}

fn summarize(n: usize, r: &ion_addressing::Result<FitResult<f64>>) -> FitSummary {
    match r {
        Ok(f) => FitSummary {
            components: n,
            chi_square: Some(f.chi_square),
            dof: Some(f.dof),
            q_value: Some(f.q_value),
            converged: f.converged,
            error: None,
        },
        Err(e) => FitSummary {
            components: n,
            chi_square: None,
            dof: None,
            q_value: None,
            converged: false,
            error: Some(e.to_string()),
        },
    }
}

fn thermometry_settings(c: &RunConfig, args: &FitArgs) -> Result<Option<ThermometrySection>> {
    let configured = c.fit.thermometry.clone();
    if !args.thermometry && args.eta_eff.is_none() && args.trap_hz.is_none() && args.sideband_kind.is_none() {
        return Ok(configured);
    }
    let eta_eff = args
        .eta_eff
        .or(configured.as_ref().map(|t| t.eta_eff))
        .ok_or_else(|| anyhow!("thermometry needs --eta-eff (or fit.thermometry.eta_eff)"))?;
    let trap_frequency_hz = args
        .trap_hz
        .or(configured.as_ref().map(|t| t.trap_frequency_hz))
        .ok_or_else(|| anyhow!("thermometry needs --trap-hz (or fit.thermometry.trap_frequency_hz)"))?;
    Ok(Some(ThermometrySection {
        eta_eff,
        trap_frequency_hz,
        sideband_kind: args
            .sideband_kind
            .or(configured.as_ref().map(|t| t.sideband_kind))
            .unwrap_or(SidebandKind::Unresolved),
        carrier_index: configured.as_ref().map_or(0, |t| t.carrier_index),
        sideband_index: configured.as_ref().map_or(1, |t| t.sideband_index),
    }))
}

pub fn cmd_fit(ctx: &mut Context, data_path: &Path, args: &FitArgs) -> Result<()> {
    let c = &ctx.config;
    let mut data = std::fs::File::open(data_path)
        .with_context(|| format!("opening {}", data_path.display()))
        .and_then(|f| Spectrum::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", data_path.display())))
        .map_err(ConfigError)?;
    if data.sigma.is_none() {
        let s = args
            .sigma
            .or(c.fit.sigma)
            .ok_or_else(|| anyhow!("{} has no sigma column; pass --sigma", data_path.display()))?;
        if !(s > 0.0 && s.is_finite()) {
            bail!("--sigma must be positive, got {s}");
        }
        data.sigma = Some(vec![s; data.len()]);
    }
    let options = FitOptions {
        max_iterations: c.fit.max_iterations,
        folded: args.folded || c.fit.folded,
        fixed_centers: c.fit.fixed_centers.clone(),
        q_threshold: c.fit.q_threshold,
        ..FitOptions::default()
    };
    let therm = thermometry_settings(c, args)?;

    let compare = args.compare.or(c.fit.compare);
    let (fit, comparison) = match compare {
        Some([a, b]) => {
            let cmp = compare_models(&data, a, b, &options);
            let chosen = cmp.preferred.unwrap_or(a);
            let fit = if chosen == cmp.components_a { cmp.fit_a.clone() } else { cmp.fit_b.clone() };
            let report = ComparisonReport {
                components_a: a,
                components_b: b,
                verdict: cmp.verdict,
                preferred: cmp.preferred,
                q_threshold: options.q_threshold,
                summary: cmp.summary.clone(),
                fits: vec![summarize(a, &cmp.fit_a), summarize(b, &cmp.fit_b)],
            };
            (fit?, Some(report))
        }
        None => {
            let n = args.components.unwrap_or(c.fit.components);
            (fit_lorentzian_sum(&data, n, &options)?, None)
        }
    };

    let thermo = match &therm {
        Some(t) if fit.converged => {
            let ratio = sideband_ratio(&fit, t.carrier_index, t.sideband_index)?;
            let r = thermometry(ratio, t.eta_eff, t.sideband_kind, t.trap_frequency_hz)?;
            Some(ThermometryReport {
                sideband_kind: t.sideband_kind,
                eta_eff: t.eta_eff,
                trap_frequency_hz: t.trap_frequency_hz,
                sideband_ratio: r.sideband_ratio.value,
                sideband_ratio_err: r.sideband_ratio.sigma,
                mean_phonon: r.mean_phonon.value,
                mean_phonon_err: r.mean_phonon.sigma,
                temperature_k: r.temperature.value,
                temperature_err_k: r.temperature.sigma,
                temperature_classical_k: r.temperature_classical,
                zero_temperature: r.zero_temperature,
            })
        }
        _ => None,
    };

    let report = FitReport {
        input: data_path.display().to_string(),
        n_points: data.len(),
        components: fit
            .components
            .iter()
            .map(|k| ComponentReport {
                center_hz: k.center,
                fwhm_hz: k.fwhm,
                amplitude: k.amplitude,
                center_err_hz: k.center_err,
                fwhm_err_hz: k.fwhm_err,
                amplitude_err: k.amplitude_err,
                center_fixed: k.center_fixed,
            })
            .collect(),
        baseline: fit.baseline,
        baseline_err: fit.baseline_err,
        chi_square: fit.chi_square,
        dof: fit.dof,
        q_value: fit.q_value,
        converged: fit.converged,
        iterations: fit.iterations,
        folded: fit.folded,
        gradient_norm: fit.gradient_norm,
        warnings: fit.warnings.clone(),
        derived: Derived { splittings_hz: fit.splittings(), thermometry: thermo },
        comparison,
    };
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    let path = ctx.out.write_json("fit.json", &report)?;
    if !fit.converged {
        return Err(FitNotConverged { iterations: fit.iterations, report: path.display().to_string() }.into());
    }
    Ok(())
}
