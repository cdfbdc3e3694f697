use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ionaddr");

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn config(&self, text: &str) -> PathBuf {
        let p = self.path("run.toml");
        std::fs::write(&p, text).unwrap();
        p
    }

    fn exec(&self, args: &[&str]) -> Output {
        Command::new(BIN).current_dir(self.dir.path()).args(args).output().unwrap()
    }

    fn ok(&self, args: &[&str]) -> Output {
        let out = self.exec(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        out
    }

    fn json(&self, rel: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(rel)).unwrap()).unwrap()
    }
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn assert_schema(kind: &str, report: &Value) {
    let text = std::fs::read_to_string(schema_dir().join(format!("{kind}.schema.json"))).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{kind} report violates its schema: {errors:?}");
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

fn chain_separation(run: &Run, n: usize) -> Vec<f64> {
    let cfg = run.config(&format!("[chain]\nn_ions = {n}\n"));
    run.ok(&["--config", cfg.to_str().unwrap(), "--out", "c", "chain"]);
    let r = run.json("c/chain.json");
    assert_schema("chain", &r);
    r["separations_m"].as_array().unwrap().iter().map(f).collect()
}

#[test]
fn chain_two_ions() {
    let run = Run::new();
    let s = chain_separation(&run, 2);
    assert_eq!(s.len(), 1);
    assert!((s[0] - 31.4e-6).abs() < 0.1e-6, "{}", s[0]);
    let csv = std::fs::read_to_string(run.path("c/chain.csv")).unwrap();
    assert!(csv.starts_with("ion,position_m,position_dimensionless,separation_to_next_m\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn chain_single_ion_sits_at_center() {
    let run = Run::new();
    assert!(chain_separation(&run, 1).is_empty());
    let r = run.json("c/chain.json");
    assert_eq!(f(&r["positions_m"][0]), 0.0);
    assert!(r["min_separation_m"].is_null());
}

#[test]
fn chain_three_to_two_ratio() {
    let run = Run::new();
    let two = chain_separation(&run, 2)[0];
    let three = chain_separation(&run, 3);
    assert_eq!(three.len(), 2);
    let ratio = two / three[0];
    assert!((ratio - 1.6f64.cbrt()).abs() < 1e-9, "{ratio}");
}

#[test]
fn address_default_two_ion_settings() {
    let run = Run::new();
    run.ok(&["--out", "a", "address"]);
    let r = run.json("a/address.json");
    assert_schema("address", &r);
    let split = f(&r["splittings_hz"][0]);
    assert!((91e3..=96e3).contains(&split), "{split}");
    let x = f(&r["worst_crosstalk"]);
    assert!((0.06..=0.07).contains(&x), "{x}");
    assert_eq!(r["gradient_source"], "default");
    assert_eq!(r["distinguishable"], false);
}

#[test]
fn address_zero_gradient_warns() {
    let run = Run::new();
    let cfg = run.config("[field]\ngradient_t_per_m = 0.0\n");
    let out = run.ok(&["--config", cfg.to_str().unwrap(), "--out", "a", "address"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gradient is zero"));
    let r = run.json("a/address.json");
    assert_schema("address", &r);
    assert_eq!(f(&r["frequencies_hz"][0]), f(&r["frequencies_hz"][1]));
    assert_eq!(f(&r["worst_crosstalk"]), 1.0);
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn address_forty_ions_distinguishable() {
    let run = Run::new();
    let cfg = run.config(
        "[chain]\nn_ions = 40\n[trap]\naxial_frequency_hz = 260e3\n\
         [field]\noffset_t = 10e-3\ngradient_t_per_m = 100.0\n[addressing]\nlinewidth_hz = 15e3\n",
    );
    run.ok(&["--config", cfg.to_str().unwrap(), "--out", "a", "--format", "json", "address"]);
    let r = run.json("a/address.json");
    assert_schema("address", &r);
    assert_eq!(r["distinguishable"], true);
    assert_eq!(r["frequencies_hz"].as_array().unwrap().len(), 40);
    assert!(!run.path("a/address.csv").exists());
}

#[test]
fn address_gradient_from_measured_splitting() {
    let run = Run::new();
    let cfg = run.config("[field]\nmeasured_splitting_hz = 93e3\n");
    run.ok(&["--config", cfg.to_str().unwrap(), "--out", "a", "address"]);
    let r = run.json("a/address.json");
    assert_eq!(r["gradient_source"], "measured_splitting");
    assert!((f(&r["splittings_hz"][0]) - 93e3).abs() < 1e-3);
}

fn spectrum_json(run: &Run, config: &str) -> Value {
    let cfg = run.config(config);
    run.ok(&["--config", cfg.to_str().unwrap(), "--out", "s", "--format", "json", "spectrum"]);
    let r = run.json("s/spectrum.json");
    assert_schema("spectrum", &r);
    r
}

#[test]
fn spectrum_single_ion_is_symmetric() {
    let run = Run::new();
    let r = spectrum_json(&run, "[chain]\nn_ions = 1\n[grid]\npoints = 101\n");
    let s: Vec<f64> = r["signal"].as_array().unwrap().iter().map(f).collect();
    for i in 0..s.len() {
        assert!((s[i] - s[s.len() - 1 - i]).abs() < 1e-12);
    }
    assert_eq!(s[50], 1.0);
}

#[test]
fn spectrum_two_ions_has_two_peaks_at_resonances() {
    let run = Run::new();
    let r = spectrum_json(&run, "[grid]\npoints = 2001\n");
    let x: Vec<f64> = r["frequency_hz"].as_array().unwrap().iter().map(f).collect();
    let s: Vec<f64> = r["signal"].as_array().unwrap().iter().map(f).collect();
    let peaks: Vec<f64> = (1..s.len() - 1).filter(|&i| s[i] > s[i - 1] && s[i] > s[i + 1]).map(|i| x[i]).collect();
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    let center = f(&r["center_frequency_hz"]);
    let ions: Vec<f64> = r["ion_resonances_hz"].as_array().unwrap().iter().map(|v| f(v) - center).collect();
    // Overlap pulls the maxima slightly inward.
    for (p, i) in peaks.iter().zip(&ions) {
        assert!((p - i).abs() < 3e3, "{p} vs {i}");
    }
}

#[test]
fn spectrum_sideband_ratio() {
    let run = Run::new();
    let r = spectrum_json(
        &run,
        "[chain]\nn_ions = 1\n[line]\nkind = \"lorentzian\"\nfwhm_hz = 1e3\n\
         [sidebands]\nenabled = true\neta_eff = 1.1e-3\nmean_phonon = 69421.4876033\ntrap_frequency_hz = 46e3\n\
         [grid]\nstart_hz = -46e3\nstop_hz = 46e3\npoints = 3\n",
    );
    let s: Vec<f64> = r["signal"].as_array().unwrap().iter().map(f).collect();
    // Other lines contribute (w/2)²/Δ² tails of order 1e-4.
    assert!((s[0] / s[1] - 0.084).abs() < 2e-4, "{}", s[0] / s[1]);
    assert!(s[2] > s[0]);
}

#[test]
fn protocol_is_byte_identical_across_reruns() {
    let run = Run::new();
    let cfg = run.config("[drift]\ndrift_jitter = 200.0\n[protocol]\nbackground_rate = 500.0\n");
    let c = cfg.to_str().unwrap();
    run.ok(&["--config", c, "--seed", "11", "--out", "p1", "protocol"]);
    run.ok(&["--config", c, "--seed", "11", "--out", "p2", "protocol"]);
    run.ok(&["--config", c, "--seed", "12", "--out", "p3", "protocol"]);
    for name in ["protocol_records.csv", "protocol_recenter.csv", "reduced.csv", "protocol.json"] {
        let a = std::fs::read(run.path(&format!("p1/{name}"))).unwrap();
        let b = std::fs::read(run.path(&format!("p2/{name}"))).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    let a = std::fs::read(run.path("p1/protocol_records.csv")).unwrap();
    let c3 = std::fs::read(run.path("p3/protocol_records.csv")).unwrap();
    assert_ne!(a, c3);
    let r = run.json("p1/protocol.json");
    assert_schema("protocol", &r);
    assert_eq!(r["seed"], 11);
}

#[test]
fn protocol_high_rate_matches_truth() {
    let run = Run::new();
    let cfg = run.config("[protocol]\ncount_rate_scale = 1e10\n");
    run.ok(&["--config", cfg.to_str().unwrap(), "--out", "p", "protocol"]);
    let r = run.json("p/protocol.json");
    // Default line: 49 kHz FWHM, relative to the zero-detuning signal.
    let truth = |d: f64| 1.0 / (1.0 + (2.0 * d / 49e3).powi(2));
    for p in r["points"].as_array().unwrap() {
        let d = f(&p["abs_detuning_hz"]);
        let bg = 1.0 / (1.0 + (2.0 * 250e3 / 49e3f64).powi(2));
        let expected = (truth(d) - bg) / (1.0 - bg);
        assert!((f(&p["signal"]) - expected).abs() < 1e-3, "{d}: {} vs {expected}", f(&p["signal"]));
    }
    assert_eq!(r["center_check"]["passed"], true);
}

#[test]
fn protocol_background_invariance() {
    let run = Run::new();
    let signals = |bg: f64, dir: &str| -> Vec<f64> {
        let cfg = run.config(&format!("[protocol]\ncount_rate_scale = 1e10\nbackground_rate = {bg}\n"));
        run.ok(&["--config", cfg.to_str().unwrap(), "--out", dir, "protocol"]);
        run.json(&format!("{dir}/protocol.json"))["points"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| f(&p["signal"]))
            .collect()
    };
    let a = signals(0.0, "b0");
    let b = signals(1e6, "b1");
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 2e-3, "{x} vs {y}");
    }
}

#[test]
fn fit_round_trip_of_spectrum_output() {
    let run = Run::new();
    run.ok(&["--out", "s", "spectrum"]);
    run.ok(&["--out", "f", "fit", "s/spectrum.csv", "--components", "2", "--sigma", "0.01"]);
    let r = run.json("f/fit.json");
    assert_schema("fit", &r);
    assert_eq!(r["converged"], true);
    run.ok(&["--out", "a", "--format", "json", "address"]);
    let split = f(&run.json("a/address.json")["splittings_hz"][0]);
    assert!((f(&r["derived"]["splittings_hz"][0]) - split).abs() < 1e-3);
    for c in r["components"].as_array().unwrap() {
        assert!((f(&c["fwhm_hz"]) - 49e3).abs() < 1e-3);
        assert!((f(&c["amplitude"]) - 1.0).abs() < 1e-9);
    }
}

const SIDEBAND_RUN: &str = "[line]\nkind = \"lorentzian\"\nfwhm_hz = 15e3\n[chain]\nn_ions = 1\n\
    [sidebands]\nenabled = true\neta_eff = 1.1e-3\nmean_phonon = 6.9e4\ntrap_frequency_hz = 46e3\n\
    [grid]\npoints = 1001\n[fit]\nsigma = 1e-3\n";

#[test]
fn fit_compare_prefers_sideband_model() {
    let run = Run::new();
    let cfg = run.config(SIDEBAND_RUN);
    let c = cfg.to_str().unwrap();
    run.ok(&["--config", c, "--out", "s", "spectrum"]);
    run.ok(&["--config", c, "--out", "f", "fit", "s/spectrum.csv", "--compare", "1,3"]);
    let r = run.json("f/fit.json");
    assert_schema("fit", &r);
    assert_eq!(r["comparison"]["verdict"], "prefer_richer");
    assert_eq!(r["comparison"]["preferred"], 3);
    assert_eq!(r["components"].as_array().unwrap().len(), 3);
}

#[test]
fn fit_thermometry_recovers_mean_phonon() {
    let run = Run::new();
    // Components are ordered by center: lower sideband, carrier, upper sideband.
    let cfg = run.config(&format!("{SIDEBAND_RUN}[fit.thermometry]\neta_eff = 1.0\ntrap_frequency_hz = 1.0\ncarrier_index = 1\nsideband_index = 0\n"));
    let c = cfg.to_str().unwrap();
    run.ok(&["--config", c, "--out", "s", "spectrum"]);
    run.ok(&[
        "--config",
        c,
        "--out",
        "f",
        "fit",
        "s/spectrum.csv",
        "--components",
        "3",
        "--thermometry",
        "--eta-eff",
        "1.1e-3",
        "--trap-hz",
        "46e3",
        "--sideband-kind",
        "lower",
    ]);
    let r = run.json("f/fit.json");
    assert_schema("fit", &r);
    let t = &r["derived"]["thermometry"];
    assert_eq!(t["sideband_kind"], "lower");
    assert_eq!(f(&t["eta_eff"]), 1.1e-3);
    assert!((f(&t["mean_phonon"]) - 6.9e4).abs() < 1.0, "{}", t["mean_phonon"]);
    assert!((f(&t["temperature_k"]) - 0.152329078879).abs() < 1e-5);
}

#[test]
fn fit_thermometry_from_measured_ratio() {
    let run = Run::new();
    let cfg = run.config(
        "[chain]\nn_ions = 1\n[line]\nkind = \"lorentzian\"\nfwhm_hz = 15e3\n\
         [sidebands]\nenabled = true\neta_eff = 1.1e-3\nmean_phonon = 69421.4876033\ntrap_frequency_hz = 46e3\n\
         [grid]\npoints = 1001\n[fit]\ncomponents = 3\nsigma = 1e-3\n\
         [fit.thermometry]\neta_eff = 1.1e-3\ntrap_frequency_hz = 46e3\ncarrier_index = 1\nsideband_index = 2\n",
    );
    let c = cfg.to_str().unwrap();
    run.ok(&["--config", c, "--out", "s", "spectrum"]);
    run.ok(&["--config", c, "--out", "f", "fit", "s/spectrum.csv"]);
    let t = &run.json("f/fit.json")["derived"]["thermometry"];
    // Upper sideband read as unresolved: (n + 1) η² / η² = n + 1.
    assert!((f(&t["sideband_ratio"]) - 0.084).abs() < 2e-6, "{}", t["sideband_ratio"]);
    assert!((f(&t["mean_phonon"]) - 6.9e4).abs() < 1e3);
}

#[test]
fn exit_code_two_for_config_and_input_errors() {
    let run = Run::new();
    let bad = run.config("[trap]\naxial_frequency_hz = 1e3\nbogus = 1\n");
    let out = run.exec(&["--config", bad.to_str().unwrap(), "chain"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let neg = run.config("[trap]\naxial_frequency_hz = -5.0\n");
    assert_eq!(run.exec(&["--config", neg.to_str().unwrap(), "chain"]).status.code(), Some(2));
    assert_eq!(run.exec(&["--config", "absent.toml", "chain"]).status.code(), Some(2));
    assert_eq!(run.exec(&["fit", "absent.csv", "--sigma", "1"]).status.code(), Some(2));
    assert_eq!(run.exec(&["fit", "absent.csv", "--compare", "1"]).status.code(), Some(2));
    assert_eq!(run.exec(&["frobnicate"]).status.code(), Some(2));

    run.ok(&["--out", "s", "spectrum"]);
    let out = run.exec(&["--out", "f", "fit", "s/spectrum.csv"]);
    assert_eq!(out.status.code(), Some(2), "missing sigma column");
}

#[test]
fn exit_code_four_when_fit_does_not_converge() {
    let run = Run::new();
    let cfg = run.config("[fit]\ncomponents = 2\nmax_iterations = 1\nsigma = 0.01\n");
    let c = cfg.to_str().unwrap();
    run.ok(&["--config", c, "--out", "s", "spectrum"]);
    let out = run.exec(&["--config", c, "--out", "f", "fit", "s/spectrum.csv"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let r = run.json("f/fit.json");
    assert_schema("fit", &r);
    assert_eq!(r["converged"], false);
}

#[test]
fn help_documents_units() {
    let run = Run::new();
    let top = String::from_utf8(run.ok(&["--help"]).stdout).unwrap();
    for unit in ["Hz", "T/m", " s,", "K"] {
        assert!(top.contains(unit), "top-level help lacks {unit}");
    }
    for (cmd, keys) in [
        ("chain", &["[Hz]", "[m]", "[u]"][..]),
        ("address", &["[T]", "[T/m]", "[Hz"][..]),
        ("spectrum", &["[1/s]", "[Hz]"][..]),
        ("protocol", &["[s]", "[Hz/s]", "[counts/s"][..]),
        ("fit", &["[Hz]", "[K]"][..]),
    ] {
        let help = String::from_utf8(run.ok(&[cmd, "--help"]).stdout).unwrap();
        for k in keys {
            assert!(help.contains(k), "`{cmd} --help` lacks {k}");
        }
    }
}

#[test]
fn example_config_runs() {
    let run = Run::new();
    let example = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/example.toml");
    let c = example.to_str().unwrap();
    for cmd in ["chain", "address", "spectrum", "protocol"] {
        run.ok(&["--config", c, "--out", "e", cmd]);
    }
    assert_schema("protocol", &run.json("e/protocol.json"));
}
