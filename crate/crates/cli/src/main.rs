//! `ionaddr`: chain geometry, Zeeman addressing, spectra, measurement
//! campaigns and Lorentzian fits from one TOML configuration.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use ion_addressing::fitting::SidebandKind;

use crate::commands::{Context, FitArgs, FitNotConverged};
use crate::config::{ConfigError, Format, RunConfig};
use crate::output::OutputDir;

const UNITS: &str = "\
Units: frequencies in Hz, magnetic fields in T, gradients in T/m, lengths in m,
durations in s, rates in 1/s, masses in u (atomic mass units), temperatures in K.
Amplitudes, ratios, crosstalk and Q values are dimensionless.

Exit codes: 0 success, 2 configuration or input error, 3 solver did not
converge, 4 fit did not converge (the report is still written), 1 other I/O failure.";

#[derive(Parser, Debug)]
#[command(name = "ionaddr", version, about = "Trapped-ion addressing in magnetic field gradients", after_help = UNITS)]
struct Cli {
    /// TOML run configuration; every section is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// RNG seed for stochastic commands (overrides `seed` and `protocol.rng_seed`).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory (overrides `output.dir`, default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Tabular output format (overrides `output.format`). JSON reports are always written.
    #[arg(long, global = true, value_enum, value_name = "FORMAT")]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Equilibrium positions of the ion chain.
    #[command(after_help = "\
Config keys: species.mass_amu [u], species.charge [e], trap.axial_frequency_hz [Hz],
trap.radial_frequency_hz [Hz, optional], chain.n_ions.

Writes chain.json (positions_m [m], separations_m [m], length_scale_m [m], span_m [m])
and, with --format csv, chain.csv with columns ion, position_m [m],
position_dimensionless [units of the length scale], separation_to_next_m [m].")]
    Chain,
    /// Per-ion resonance frequencies, splittings and crosstalk.
    #[command(after_help = "\
Config keys: everything used by `chain`, plus field.offset_t [T],
field.gradient_t_per_m [T/m] or field.measured_splitting_hz [Hz] with optional
field.measured_separation_m [m], transition.lande_g, transition.delta_mj,
addressing.linewidth_hz [Hz, FWHM], addressing.crosstalk_threshold [fraction, default 0.01].

Writes address.json (frequencies_hz [Hz], splittings_hz [Hz], crosstalk [fraction],
required_gradient_t_per_m [T/m]) and, with --format csv, address.csv with columns
ion, position_m [m], frequency_hz [Hz], splitting_to_next_hz [Hz], crosstalk_to_next.")]
    Address,
    /// Noiseless model spectrum of the chain.
    #[command(after_help = "\
Config keys: everything used by `address`, plus line.kind = \"lorentzian\"
(line.fwhm_hz [Hz], line.amplitude) or \"rate\" (line.rf_pump_rate_per_s [1/s],
line.repump_rate_per_s [1/s], line.carrier_fwhm_hz [Hz], line.scale, line.branching),
sidebands.enabled, sidebands.mean_phonon, sidebands.eta_eff, sidebands.kappa_convention
(\"ordinary\" divides by the trap frequency in Hz, \"angular\" by 2 pi times it),
sidebands.eta_optical, sidebands.trap_frequency_hz [Hz], grid.start_hz [Hz],
grid.stop_hz [Hz], grid.points, grid.relative, grid.baseline.

Writes spectrum.csv (frequency_hz [Hz], signal) or spectrum.json. With
grid.relative = true, frequency_hz is the detuning from the resonance at the trap center.")]
    Spectrum,
    /// Seeded Monte Carlo of the seven-detuning measurement campaign.
    #[command(after_help = "\
Config keys: line (lorentzian only) and sidebands as for `spectrum`, plus
protocol.probe_duration [s], protocol.cool_duration [s], protocol.pre_probe_delay [s],
protocol.variable_detunings [Hz], protocol.repeats_per_detuning,
protocol.count_rate_scale [counts/s at the line peak], protocol.background_rate [counts/s],
protocol.ordering (\"interleaved\" or \"blocked\"), protocol.recenter, protocol.rng_seed,
drift.center_drift_rate [Hz/s], drift.drift_jitter [Hz RMS per cycle].

Writes protocol_records.csv (cycle_index, detuning_hz [Hz], counts, timestamp_s [s]),
protocol_recenter.csv (before_cycle, timestamp_s [s], fitted_center_hz [Hz]),
reduced.csv (frequency_hz = |detuning| [Hz], signal, sigma; normalized to the zero-detuning
signal) with --format csv, and protocol.json.")]
    Protocol,
    /// Fit a sum of Lorentzians to a spectrum CSV file.
    #[command(after_help = "\
Input: CSV with header frequency_hz,signal[,sigma]; frequency in Hz, signal and sigma
in any common unit. Config keys: fit.components, fit.compare, fit.folded, fit.q_threshold,
fit.max_iterations, fit.sigma, fit.fixed_centers [[index, Hz]], fit.thermometry.eta_eff,
fit.thermometry.trap_frequency_hz [Hz], fit.thermometry.sideband_kind,
fit.thermometry.carrier_index, fit.thermometry.sideband_index.

Writes fit.json: centers and widths in Hz, amplitudes and baseline in signal units,
chi_square, dof, q_value, splittings_hz [Hz], and with thermometry the sideband ratio,
mean phonon number, temperature_k [K] and its high-temperature limit temperature_classical_k [K].")]
    Fit(FitCli),
}

#[derive(clap::Args, Debug)]
struct FitCli {
    /// Spectrum CSV to fit (frequency_hz [Hz], signal, optional sigma).
    data: PathBuf,
    /// Number of Lorentzian components.
    #[arg(long, value_name = "N")]
    components: Option<usize>,
    /// Fit two component counts and apply the Q-threshold rule, e.g. `1,2`.
    #[arg(long, value_name = "A,B", value_delimiter = ',')]
    compare: Option<Vec<usize>>,
    /// Data are ±detuning averages; component 0 is pinned at zero detuning.
    #[arg(long)]
    folded: bool,
    /// Constant per-point uncertainty for files without a sigma column, in signal units.
    #[arg(long, value_name = "SIGMA")]
    sigma: Option<f64>,
    /// Convert the sideband/carrier height ratio to a mean phonon number and temperature.
    #[arg(long)]
    thermometry: bool,
    /// Effective Lamb-Dicke parameter (dimensionless) for thermometry.
    #[arg(long, value_name = "X")]
    eta_eff: Option<f64>,
    /// Axial trap frequency for thermometry, Hz.
    #[arg(long, value_name = "HZ")]
    trap_hz: Option<f64>,
    /// Which sideband the fitted ratio refers to.
    #[arg(long, value_enum, value_name = "KIND")]
    sideband_kind: Option<KindArg>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum KindArg {
    Lower,
    Upper,
    Unresolved,
}

impl From<KindArg> for SidebandKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Lower => SidebandKind::Lower,
            KindArg::Upper => SidebandKind::Upper,
            KindArg::Unresolved => SidebandKind::Unresolved,
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use ion_addressing::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if cause.is::<FitNotConverged>() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Convergence { .. } | E::Singular => 3,
                E::RankDeficient { .. } => 4,
                E::Io(_) => 1,
                _ => 2,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<tempfile::PersistError>() {
            return 1;
        }
    }
    2
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(ConfigError)?,
        None => RunConfig::default(),
    };
    let dir = cli.out.clone().unwrap_or_else(|| config.output.dir.clone());
    let format = cli.format.unwrap_or(config.output.format);
    let mut ctx = Context { config, seed: cli.seed, format, out: OutputDir::new(dir) };
    let result = match &cli.command {
        Command::Chain => commands::cmd_chain(&mut ctx),
        Command::Address => commands::cmd_address(&mut ctx),
        Command::Spectrum => commands::cmd_spectrum(&mut ctx),
        Command::Protocol => commands::cmd_protocol(&mut ctx),
        Command::Fit(f) => {
            let compare = match f.compare.as_deref() {
                None => None,
                Some(&[a, b]) => Some([a, b]),
                Some(_) => {
                    return Err(ConfigError(anyhow::anyhow!("--compare takes two component counts, e.g. 1,2")).into())
                }
            };
            let args = FitArgs {
                components: f.components,
                compare,
                folded: f.folded,
                sigma: f.sigma,
                thermometry: f.thermometry,
                eta_eff: f.eta_eff,
                trap_hz: f.trap_hz,
                sideband_kind: f.sideband_kind.map(Into::into),
            };
            commands::cmd_fit(&mut ctx, &f.data, &args)
        }
    };
    for p in ctx.out.written() {
        println!("wrote {}", p.display());
    }
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
