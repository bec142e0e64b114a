use fibercav_core::fit::{analyze_spectrum, fit_lorentzian, AnalysisOptions, Background, FitOptions, Polarity};
use fibercav_core::spectral::{cavity_spectrum, CavityModel, Channel, SpectrumTrace, DEFAULT_GROUP_INDEX};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

const FSR: f64 = 3.8e9;

fn model(t1: f64, t2: f64, alpha_int: f64) -> CavityModel {
    CavityModel::from_losses(t1, t2, alpha_int, 27.0, DEFAULT_GROUP_INDEX)
        .unwrap()
        .with_fsr(FSR)
        .unwrap()
}

/// Three resonances at 0, FSR and 2·FSR, sampled `per_fwhm` times per linewidth.
fn three_fsr_grid(m: &CavityModel, per_fwhm: f64) -> Vec<f64> {
    let step = m.fwhm_hz() / per_fwhm;
    let start = -0.5 * m.fsr_hz();
    let n = (3.0 * m.fsr_hz() / step) as usize;
    (0..n).map(|i| start + i as f64 * step).collect()
}

fn random_split(rng: &mut ChaCha8Rng, total: f64) -> (f64, f64, f64) {
    let e: Vec<f64> = (0..3).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    (total * e[0] / s, total * e[1] / s, total * e[2] / s)
}

#[test]
fn fitted_finesse_closes_on_total_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let alpha = rng.random_range(0.001..=0.02);
        let (t1, t2, ai) = random_split(&mut rng, alpha);
        let m = model(t1, t2, ai);
        let alpha_tot = m.total_loss();
        let trace = cavity_spectrum(&m, &three_fsr_grid(&m, 20.0)).unwrap();
        let analysis = analyze_spectrum(&trace, &AnalysisOptions::transmission()).unwrap();
        assert_eq!(analysis.peaks.len(), 3);
        let f = analysis.finesse.unwrap().value;
        let target = 2.0 * std::f64::consts::PI / alpha_tot;
        let rel = (f - target) / target;
        assert!(rel.abs() < 0.01, "alpha {alpha_tot:.5}: F {f:.2} vs {target:.2} ({rel:+.4})");
        let fsr = analysis.fsr.unwrap().value;
        assert!(((fsr - FSR) / FSR).abs() < 1e-3);
    }
}

#[test]
fn reflection_dips_coincide_with_transmission_peaks() {
    let m = model(0.000867, 0.000867, 0.0031);
    let grid = three_fsr_grid(&m, 20.0);
    let trace = cavity_spectrum(&m, &grid).unwrap();
    let step = grid[1] - grid[0];
    let peaks = fibercav_core::fit::detect_peaks(&trace, Channel::Transmission, Polarity::Peak, 0.3).unwrap();
    let dips = fibercav_core::fit::detect_peaks(&trace, Channel::Reflection, Polarity::Dip, 0.3).unwrap();
    assert_eq!(peaks.len(), 3);
    assert_eq!(dips.len(), 3);
    for (p, d) in peaks.iter().zip(&dips) {
        assert!((p.center_hz - d.center_hz).abs() <= step);
    }
}

fn lorentzian_trace(fwhm: f64, amp: f64, noise: f64, rng: Option<&mut ChaCha8Rng>) -> SpectrumTrace {
    let n = 201;
    let x: Vec<f64> = (0..n).map(|i| -5.0 * fwhm + 10.0 * fwhm * i as f64 / (n - 1) as f64).collect();
    let mut y: Vec<f64> = x.iter().map(|&f| 0.05 + amp / (1.0 + 4.0 * f * f / (fwhm * fwhm))).collect();
    if let Some(rng) = rng {
        let normal = Normal::new(0.0, noise * amp).unwrap();
        for v in &mut y {
            *v += normal.sample(rng);
        }
    }
    SpectrumTrace::new(x, y, None).unwrap()
}

#[test]
fn noisy_linewidth_statistics() {
    let fwhm = 2.9e6;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut widths = Vec::new();
    let mut sigmas = Vec::new();
    for _ in 0..100 {
        let t = lorentzian_trace(fwhm, 0.13, 0.01, Some(&mut rng));
        let win = (t.freq_hz[0], t.freq_hz[t.len() - 1]);
        let fit = fit_lorentzian(&t, Channel::Transmission, win, Polarity::Peak, &FitOptions::default()).unwrap();
        assert!(((fit.fwhm.value - fwhm) / fwhm).abs() < 0.05);
        widths.push(fit.fwhm.value);
        sigmas.push(fit.fwhm.sigma);
    }
    let n = widths.len() as f64;
    let mean = widths.iter().sum::<f64>() / n;
    let spread = (widths.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let reported = sigmas.iter().sum::<f64>() / n;
    assert!((mean - fwhm).abs() < reported, "bias {} vs sigma {reported}", mean - fwhm);
    let ratio = reported / spread;
    assert!((0.5..=2.0).contains(&ratio), "reported/empirical = {ratio}");
}

#[test]
fn dip_with_etalon_fringe() {
    let fwhm = 2.9e6;
    let depth = 0.6;
    let period = 8.0 * fwhm;
    let n = 301;
    let x: Vec<f64> = (0..n).map(|i| -5.0 * fwhm + 10.0 * fwhm * i as f64 / (n - 1) as f64).collect();
    let center = 0.3 * fwhm;
    let y: Vec<f64> = x
        .iter()
        .map(|&f| {
            0.95 + 0.05 * depth * (2.0 * std::f64::consts::PI * f / period + 0.7).sin()
                - depth / (1.0 + 4.0 * (f - center).powi(2) / (fwhm * fwhm))
        })
        .collect();
    let t = SpectrumTrace::new(x.clone(), vec![0.0; n], Some(y)).unwrap();
    let opts = FitOptions {
        background: Background::LinearEtalon,
        ..FitOptions::default()
    };
    let fit = fit_lorentzian(&t, Channel::Reflection, (x[0], x[n - 1]), Polarity::Dip, &opts).unwrap();
    assert!(((fit.fwhm.value - fwhm) / fwhm).abs() < 0.02, "{}", fit.fwhm.value);
    assert!(((fit.center.value - center) / fwhm).abs() < 0.02);
    let e = fit.etalon.unwrap();
    assert!(((e.period_hz - period) / period).abs() < 0.02);
}

#[test]
fn rescaled_axis_keeps_finesse() {
    let m = model(0.001, 0.0008, 0.002);
    let grid = three_fsr_grid(&m, 20.0);
    let base = cavity_spectrum(&m, &grid).unwrap();
    let a = analyze_spectrum(&base, &AnalysisOptions::transmission()).unwrap();
    for s in [1e-3, 4.0, 7.3] {
        let scaled = SpectrumTrace::new(
            grid.iter().map(|f| f * s).collect(),
            base.transmission.clone(),
            base.reflection.clone(),
        )
        .unwrap();
        let b = analyze_spectrum(&scaled, &AnalysisOptions::transmission()).unwrap();
        let fa = a.finesse.unwrap().value;
        let fb = b.finesse.unwrap().value;
        assert!(((fa - fb) / fa).abs() < 1e-12, "s = {s}: {fa} vs {fb}");
        let ratio = b.fwhm.value / a.fwhm.value;
        assert!((ratio / s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fits_are_deterministic() {
    let mut r1 = ChaCha8Rng::seed_from_u64(5);
    let mut r2 = ChaCha8Rng::seed_from_u64(5);
    let a = lorentzian_trace(1.0, 0.2, 0.01, Some(&mut r1));
    let b = lorentzian_trace(1.0, 0.2, 0.01, Some(&mut r2));
    let opts = FitOptions {
        jitter_seed: Some(3),
        ..FitOptions::default()
    };
    let fa = fit_lorentzian(&a, Channel::Transmission, (-5.0, 5.0), Polarity::Peak, &opts).unwrap();
    let fb = fit_lorentzian(&b, Channel::Transmission, (-5.0, 5.0), Polarity::Peak, &opts).unwrap();
    assert_eq!(serde_json::to_string(&fa).unwrap(), serde_json::to_string(&fb).unwrap());
}
