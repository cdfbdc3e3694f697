use ion_addressing::protocol::{
    reduce_campaign, run_campaign, DriftModel, Ordering, ProtocolConfig, RawCampaign, BACKGROUND_DETUNING,
};
use ion_addressing::spectrum::{Lorentzian, SpectrumModel};

fn truth() -> SpectrumModel<f64> {
    SpectrumModel::single(0.0, 30e3, 1.0).unwrap()
}

fn config(seed: u64) -> ProtocolConfig {
    ProtocolConfig { rng_seed: seed, variable_detunings: vec![30e3, 46e3, 60e3], ..ProtocolConfig::default() }
}

/// Noiseless reduced value: (L(Δ) − L(250k)) / (L(0) − L(250k)).
fn ideal_ratio(m: &SpectrumModel<f64>, d: f64) -> f64 {
    let b = m.eval(BACKGROUND_DETUNING);
    (0.5 * (m.eval(d) + m.eval(-d)) - b) / (m.eval(0.0) - b)
}

#[test]
fn campaigns_are_reproducible() {
    let a = run_campaign(&truth(), &config(7), &DriftModel::default()).unwrap();
    let b = run_campaign(&truth(), &config(7), &DriftModel::default()).unwrap();
    let c = run_campaign(&truth(), &config(8), &DriftModel::default()).unwrap();
    assert_eq!(a.records, b.records);
    assert_ne!(a.records, c.records);
}

#[test]
fn counts_are_poisson() {
    // Flat mean of 100 counts per probe window.
    let flat = SpectrumModel::single(0.0, 1e3, 1e-300).unwrap();
    let cfg = ProtocolConfig { background_rate: 100.0 / 0.15, repeats_per_detuning: 1429, ..ProtocolConfig::default() };
    let raw = run_campaign(&flat, &cfg, &DriftModel::default()).unwrap();
    let n = raw.records.len() as f64;
    assert!(n >= 1e4);
    let mean = raw.records.iter().map(|r| r.counts as f64).sum::<f64>() / n;
    let var = raw.records.iter().map(|r| (r.counts as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 100.0).abs() < 0.5, "mean {mean}");
    let dispersion = var / mean;
    assert!((0.94..=1.06).contains(&dispersion), "dispersion {dispersion}");
}

#[test]
fn high_rate_limit_recovers_the_line() {
    let cfg = ProtocolConfig { count_rate_scale: 1e9, ..config(3) };
    let red = reduce_campaign(&run_campaign(&truth(), &cfg, &DriftModel::default()).unwrap()).unwrap();
    for &d in &cfg.variable_detunings {
        let p = red.point(d).unwrap();
        let want = ideal_ratio(&truth(), d);
        assert!((p.signal / want - 1.0).abs() < 1e-3, "{d}: {} vs {want}", p.signal);
    }
    assert!(red.center_check.unwrap().passed);
}

#[test]
fn background_is_subtracted() {
    let base = ProtocolConfig { count_rate_scale: 1e9, ..config(4) };
    let with_bg = ProtocolConfig { background_rate: 1e6, ..base.clone() };
    let a = reduce_campaign(&run_campaign(&truth(), &base, &DriftModel::default()).unwrap()).unwrap();
    let b = reduce_campaign(&run_campaign(&truth(), &with_bg, &DriftModel::default()).unwrap()).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.signal - q.signal).abs() < 3.0 * (p.sigma.powi(2) + q.sigma.powi(2)).sqrt() + 1e-12);
    }
    assert!((b.background_counts - a.background_counts - 1e6 * 0.15).abs() < 5.0 * (1.5e5f64).sqrt());
}

#[test]
fn recentering_cancels_slow_drift() {
    let drift = DriftModel { center_drift_rate: 10.0, drift_jitter: 0.0 };
    for ordering in [Ordering::Interleaved, Ordering::Blocked] {
        let cfg = ProtocolConfig { count_rate_scale: 1e10, ordering, variable_detunings: vec![30e3; 8], ..config(5) };
        let steady = reduce_campaign(&run_campaign(&truth(), &cfg, &DriftModel::default()).unwrap()).unwrap();
        let drifting = reduce_campaign(&run_campaign(&truth(), &cfg, &drift).unwrap()).unwrap();
        let unchecked = ProtocolConfig { recenter: false, ..cfg.clone() };
        let uncorrected = reduce_campaign(&run_campaign(&truth(), &unchecked, &drift).unwrap()).unwrap();
        let (a, b, c) = (steady.point(30e3).unwrap(), drifting.point(30e3).unwrap(), uncorrected.point(30e3).unwrap());
        let dev = (b.signal / a.signal - 1.0).abs();
        assert!(dev < 5e-3, "{ordering:?}: {} vs {}", b.signal, a.signal);
        assert!((c.signal / a.signal - 1.0).abs() > dev, "{ordering:?}: recentering should help");
    }
}

#[test]
fn recentering_bounds_accumulated_drift() {
    let drift = DriftModel { center_drift_rate: 200.0, drift_jitter: 0.0 };
    let cfg = config(6);
    let raw = run_campaign(&truth(), &cfg, &drift).unwrap();
    let block = 7.0 * cfg.repeats_per_detuning as f64 * cfg.cycle_duration();
    assert_eq!(raw.recenter_events.len(), cfg.variable_detunings.len());
    for e in &raw.recenter_events[1..] {
        assert!((e.fitted_center_hz - 200.0 * block).abs() < 1e-6 * block);
    }
}

#[test]
fn mirrored_line_gives_same_reduction() {
    // Swapping +Δ and −Δ must not change the folded result.
    let asym = SpectrumModel::new(
        vec![Lorentzian::new(0.0, 30e3, 1.0).unwrap(), Lorentzian::new(46e3, 30e3, 0.1).unwrap()],
        0.0,
    )
    .unwrap();
    let mirror = SpectrumModel::new(
        vec![Lorentzian::new(0.0, 30e3, 1.0).unwrap(), Lorentzian::new(-46e3, 30e3, 0.1).unwrap()],
        0.0,
    )
    .unwrap();
    let cfg = ProtocolConfig { count_rate_scale: 1e9, ..config(9) };
    let a = reduce_campaign(&run_campaign(&asym, &cfg, &DriftModel::default()).unwrap()).unwrap();
    let b = reduce_campaign(&run_campaign(&mirror, &cfg, &DriftModel::default()).unwrap()).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!((p.signal - q.signal).abs() < 4.0 * (p.sigma.powi(2) + q.sigma.powi(2)).sqrt());
    }
    let check = a.center_check.unwrap();
    assert!(!check.passed, "asymmetric line should fail the ±15 kHz check");
}

#[test]
fn records_round_trip_through_csv() {
    let raw = run_campaign(&truth(), &config(10), &DriftModel::default()).unwrap();
    let mut buf = Vec::new();
    raw.write_records_csv(&mut buf).unwrap();
    let back = RawCampaign::read_records_csv(buf.as_slice()).unwrap();
    assert_eq!(back.records.len(), raw.records.len());
    for (a, b) in raw.records.iter().zip(&back.records) {
        assert_eq!((a.cycle_index, a.counts), (b.cycle_index, b.counts));
        assert!((a.detuning_hz - b.detuning_hz).abs() <= 1e-11 * a.detuning_hz.abs());
    }
}

#[test]
fn reported_sigma_matches_scatter() {
    let cfg = ProtocolConfig { variable_detunings: vec![46e3], ..config(0) };
    let mut values = Vec::new();
    let mut sigmas = Vec::new();
    for seed in 0..300 {
        let red = reduce_campaign(
            &run_campaign(&truth(), &ProtocolConfig { rng_seed: seed, ..cfg.clone() }, &DriftModel::default()).unwrap(),
        )
        .unwrap();
        let p = red.point(46e3).unwrap();
        values.push(p.signal);
        sigmas.push(p.sigma);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let typical = sigmas.iter().sum::<f64>() / n;
    assert!((sd / typical - 1.0).abs() < 0.15, "scatter {sd} vs reported {typical}");
}
