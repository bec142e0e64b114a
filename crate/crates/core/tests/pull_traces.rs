use fibercav_core::absorption::{
    classify_flame, fit_loss_growth, load_pull_trace, write_pull_trace, FlameLabel, FlameThresholds, GrowthModel,
    PullMetadata, PullTrace,
};
use fibercav_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn times(n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * dt).collect()
}

/// Ramp to 8% with a few shallow dips, reference flat at 0.3%.
fn h2_fixture() -> PullTrace {
    let n = 300;
    let loss: Vec<f64> = (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            (0.08 * x * x + 0.002 * (12.0 * x).sin().min(0.0) * x).clamp(0.0, 1.0)
        })
        .collect();
    PullTrace::new(times(n, 0.5), loss, Some(vec![0.003; n]), PullMetadata::default()).unwrap()
}

fn d2_fixture() -> PullTrace {
    let n = 300;
    let loss: Vec<f64> = (0..n).map(|i| 0.005 + 0.0005 * (i as f64 * 0.37).sin()).collect();
    PullTrace::new(times(n, 0.5), loss, Some(vec![0.003; n]), PullMetadata::default()).unwrap()
}

fn with_noise(trace: &PullTrace, amplitude: f64, seed: u64) -> PullTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loss = trace
        .loss_primary
        .iter()
        .map(|v| (v + rng.random_range(-amplitude..=amplitude)).clamp(0.0, 1.0))
        .collect();
    PullTrace::new(trace.time_s.clone(), loss, trace.loss_reference.clone(), trace.metadata.clone()).unwrap()
}

#[test]
fn fixtures_classify_as_documented() {
    let th = FlameThresholds::default();
    let h2 = classify_flame(&h2_fixture(), &th).unwrap();
    assert_eq!(h2.label, FlameLabel::H2Like);
    assert!((h2.final_loss - 0.08).abs() < 0.002);
    assert!(h2.reference_ok);
    let d2 = classify_flame(&d2_fixture(), &th).unwrap();
    assert_eq!(d2.label, FlameLabel::D2Like);
    assert!(d2.reference_ok);
}

#[test]
fn classification_survives_small_noise() {
    let th = FlameThresholds::default();
    for seed in 0..50 {
        assert_eq!(classify_flame(&with_noise(&h2_fixture(), 0.001, seed), &th).unwrap().label, FlameLabel::H2Like);
        assert_eq!(classify_flame(&with_noise(&d2_fixture(), 0.001, seed), &th).unwrap().label, FlameLabel::D2Like);
    }
}

#[test]
fn classification_ignores_time_units() {
    let th = FlameThresholds::default();
    for base in [h2_fixture(), d2_fixture()] {
        let reference = classify_flame(&base, &th).unwrap();
        for scale in [1e-3, 60.0] {
            let t = base.time_s.iter().map(|v| v * scale).collect();
            let scaled = PullTrace::new(t, base.loss_primary.clone(), base.loss_reference.clone(), base.metadata.clone())
                .unwrap();
            assert_eq!(classify_flame(&scaled, &th).unwrap(), reference);
        }
    }
}

#[test]
fn reference_channel_flags_excursions() {
    let mut t = d2_fixture();
    t.loss_reference.as_mut().unwrap()[100] = 0.012;
    assert!(!classify_flame(&t, &FlameThresholds::default()).unwrap().reference_ok);
}

#[test]
fn files_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut trace = with_noise(&h2_fixture(), 0.001, 7);
    trace.metadata.flame_label = Some("H2-O2".into());
    let path = dir.path().join("h2.csv");
    write_pull_trace(&trace, &path).unwrap();
    let back = load_pull_trace(&path).unwrap();
    assert_eq!(back, trace);
    for (a, b) in back.loss_primary.iter().zip(&trace.loss_primary) {
        assert_eq!(a.to_bits(), b.to_bits());
    }

    let bare = dir.path().join("bare.csv");
    std::fs::write(&bare, "time_s,loss_primary\n0,0.01\n1,0.02\n2,0.03\n").unwrap();
    let loaded = load_pull_trace(&bare).unwrap();
    assert_eq!(loaded.len(), 3);
    assert_eq!(loaded.metadata, PullMetadata::default());
    assert_eq!(loaded.metadata.probe_wavelength_nm, 1389.0);
}

#[test]
fn decreasing_time_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut body = String::from("time_s,loss_primary\n");
    for (i, t) in [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 7.0].iter().enumerate() {
        body.push_str(&format!("{t},{}\n", 0.001 * i as f64));
    }
    std::fs::write(&path, body).unwrap();
    let err = load_pull_trace(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { row: 7, .. }), "{err}");
    assert!(err.to_string().contains("row 7"));
}

#[test]
fn exponential_onset_parameters_are_recovered() {
    let (b, r, t_on) = (0.005, 0.05, 40.0);
    let t = times(400, 0.25);
    let clean: Vec<f64> = t.iter().map(|&x| b + 0.01 * (r * (x - t_on)).exp()).collect();
    let peak = clean.iter().cloned().fold(0.0, f64::max);
    let normal = Normal::new(0.0, 0.01 * peak).unwrap();
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = clean.iter().map(|v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0)).collect();
        let trace = PullTrace::new(t.clone(), y, None, PullMetadata::default()).unwrap();
        let fit = fit_loss_growth(&trace, GrowthModel::ExponentialOnset).unwrap();
        assert!(!fit.fell_back_to_linear);
        assert!(((fit.rate.value - r) / r).abs() < 0.05, "seed {seed}: rate {:?}", fit.rate);
        let onset = fit.onset_time_s.unwrap();
        assert!(((onset.value - t_on) / t_on).abs() < 0.05, "seed {seed}: onset {onset:?}");
        assert!((fit.baseline.value - b).abs() < 0.05 * peak, "seed {seed}: baseline {:?}", fit.baseline);
    }
}
