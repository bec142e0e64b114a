//! Acceptance suite: one [PASS]/[FAIL] line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use fibercav_cli::{load_run_record, run, Cli, CliError};
use fibercav_core::absorption::{
    classify_flame, load_pull_trace, overtone_center, transparency_check, write_pull_trace, AbsorptionBand,
    FlameLabel, FlameThresholds, PullTrace,
};
use fibercav_core::budget::{budget, finesse_from_loss, loss_from_finesse, CouplingRegime};
use fibercav_core::coop::{cooperativity, required_finesse, CooperativityScenario};
use fibercav_core::fit::{analyze_spectrum, cavity_length_from_fsr, finesse, fit_lorentzian, AnalysisOptions, FitOptions, Polarity};
use fibercav_core::mode::{guided_mode, v_number, FiberGeometry, DEFAULT_SILICA_INDEX};
use fibercav_core::spectral::{cavity_spectrum, exact_on_resonance, CavityModel, Channel, SpectrumTrace, DEFAULT_GROUP_INDEX};
use fibercav_core::{render, ErrorKind, Precision, Quantity};
use fibercav_oracles::{fd_effective_index_extrapolated, trapezoid_mode_area};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

/// Mean wall time of `f` over `n` calls.
fn mean_time<T>(n: u32, mut f: impl FnMut() -> T) -> Duration {
    let start = Instant::now();
    for _ in 0..n {
        std::hint::black_box(f());
    }
    start.elapsed() / n
}

fn c1_finesse_loss_closure() -> Check {
    let a = loss_from_finesse(Quantity::new(1.3e3, 1e2).unwrap()).map_err(|e| e.to_string())?;
    let (v, s) = (a.value * 100.0, a.sigma * 100.0);
    ensure((v - 0.48).abs() <= 0.01, format!("value {v:.4}% vs 0.48%"))?;
    ensure(((s - 0.03) / 0.03).abs() <= 0.3, format!("sigma {s:.4}% vs 0.03%"))?;
    ensure((v - 0.4833).abs() < 1e-3 && (s - 0.0372).abs() < 1e-3, format!("{v:.4}% ± {s:.4}%"))?;
    let t = mean_time(1000, || loss_from_finesse(Quantity::new(1.3e3, 1e2).unwrap()));
    ensure(t < Duration::from_millis(1), format!("runtime {t:?}"))?;
    Ok(format!("α_tot = {v:.3}% ± {s:.3}%, {t:?}/call"))
}

fn c2_intrinsic_finesse() -> Check {
    let f = finesse_from_loss(Quantity::exact(0.0031)).map_err(|e| e.to_string())?.ok_or("unbounded")?;
    ensure(f.value.round() == 2027.0, format!("F_int = {}", f.value))?;
    let text = render(&f, Precision::Significant(2));
    ensure(text == "2.0×10³", format!("rendered {text}"))?;
    let t = mean_time(1000, || finesse_from_loss(Quantity::exact(0.0031)));
    ensure(t < Duration::from_millis(1), format!("runtime {t:?}"))?;
    Ok(format!("F_int = {:.1} -> {text}", f.value))
}

fn c3_fsr_fwhm_pipeline() -> Check {
    let fsr = Quantity::exact(3.8e9);
    let fwhm = Quantity::new(2.9e6, 0.2e6).unwrap();
    let f = finesse(fsr, fwhm).map_err(|e| e.to_string())?;
    ensure(f.value.round() == 1310.0, format!("finesse {}", f.value))?;
    let text = render(&f, Precision::Significant(2));
    ensure(text == "1.3(1)×10³", format!("rendered {text}"))?;
    let l = cavity_length_from_fsr(fsr, DEFAULT_GROUP_INDEX).map_err(|e| e.to_string())?;
    ensure((l.value - 27.0).abs() <= 0.3, format!("length {} mm", l.value))?;
    let t = mean_time(1000, || {
        (finesse(fsr, fwhm).unwrap(), cavity_length_from_fsr(fsr, DEFAULT_GROUP_INDEX).unwrap())
    });
    ensure(t < Duration::from_millis(1), format!("runtime {t:?}"))?;
    Ok(format!("F = {text}, L = {:.2} mm", l.value))
}

fn c4_threshold_pair() -> Check {
    let a = loss_from_finesse(Quantity::exact(1047.0)).map_err(|e| e.to_string())?.value * 100.0;
    ensure((a - 0.6).abs() <= 0.005, format!("α = {a:.4}%"))?;
    Ok(format!("α(1047) = {a:.4}%"))
}

fn cavity(t1: f64, t2: f64, ai: f64) -> CavityModel {
    CavityModel::from_losses(t1, t2, ai, 27.0, DEFAULT_GROUP_INDEX)
        .unwrap()
        .with_fsr(3.8e9)
        .unwrap()
}

fn c5_synth_then_fit() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let alpha: f64 = rng.random_range(0.001..=0.02);
        let e: Vec<f64> = (0..3).map(|_| Exp1.sample(&mut rng)).collect();
        let s: f64 = e.iter().sum();
        let m = cavity(alpha * e[0] / s, alpha * e[1] / s, alpha * e[2] / s);
        let step = m.fwhm_hz() / 20.0;
        let n = (3.0 * m.fsr_hz() / step) as usize;
        let grid: Vec<f64> = (0..n).map(|i| -0.5 * m.fsr_hz() + i as f64 * step).collect();
        let trace = cavity_spectrum(&m, &grid).map_err(|e| e.to_string())?;
        let a = analyze_spectrum(&trace, &AnalysisOptions::transmission()).map_err(|e| format!("model {k}: {e}"))?;
        let f = a.finesse.ok_or("no finesse")?.value;
        let target = 2.0 * PI / m.total_loss();
        let rel = ((f - target) / target).abs();
        worst = worst.max(rel);
        ensure(rel < 0.01, format!("model {k}: F {f:.1} vs 2π/α {target:.1}"))?;
    }

    let m = cavity(0.000867, 0.000867, 0.0031);
    let truth = m.fwhm_hz();
    let grid: Vec<f64> = (0..201).map(|i| 3.8e9 + truth * (-5.0 + 0.05 * i as f64)).collect();
    let clean = cavity_spectrum(&m, &grid).map_err(|e| e.to_string())?;
    let peak = clean.transmission.iter().cloned().fold(0.0, f64::max);
    let normal = Normal::new(0.0, 0.01 * peak).unwrap();
    let (mut widths, mut sigmas) = (Vec::new(), Vec::new());
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = clean.transmission.iter().map(|v| v + normal.sample(&mut rng)).collect();
        let t = SpectrumTrace::new(grid.clone(), y, None).map_err(|e| e.to_string())?;
        let fit = fit_lorentzian(&t, Channel::Transmission, (grid[0], grid[200]), Polarity::Peak, &FitOptions::default())
            .map_err(|e| format!("draw {seed}: {e}"))?;
        widths.push(fit.fwhm.value);
        sigmas.push(fit.fwhm.sigma);
    }
    let n = widths.len() as f64;
    let mean = widths.iter().sum::<f64>() / n;
    let spread = (widths.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let reported = sigmas.iter().sum::<f64>() / n;
    let bias = mean - truth;
    ensure(bias.abs() < reported, format!("bias {bias:.3e} Hz vs sigma {reported:.3e} Hz"))?;
    let ratio = reported / spread;
    ensure((0.5..=2.0).contains(&ratio), format!("reported/empirical sigma {ratio:.2}"))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), format!("runtime {t:?}"))?;
    Ok(format!(
        "worst closure {:.3}%, bias {:.2}σ, σ ratio {ratio:.2}, {t:.2?}",
        worst * 100.0,
        bias / reported
    ))
}

fn c6_budget_inverse() -> Check {
    let (t, ai) = (0.000867, 0.0031);
    let m = CavityModel::from_losses(t, t, ai, 27.0, DEFAULT_GROUP_INDEX).map_err(|e| e.to_string())?;
    let on = exact_on_resonance(&m).map_err(|e| e.to_string())?;
    let f = Quantity::exact(m.finesse());
    let (r1, r2) = (Quantity::exact(on.reflection_side_1), Quantity::exact(on.reflection_side_2));
    let u = CouplingRegime::Undercoupled;
    let b = budget(f, r1, r2, u, u).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let worst = rel(b.t1.value, t).max(rel(b.t2.value, t)).max(rel(b.alpha_int.value, ai));
    ensure(worst < 5e-3, format!("worst channel error {:.3}%", worst * 100.0))?;
    let o = CouplingRegime::Overcoupled;
    let wrong = budget(f, r1, r2, o, o);
    ensure(
        matches!(&wrong, Err(e) if e.kind() == ErrorKind::Inconsistency),
        format!("overcoupled branches not rejected: {wrong:?}"),
    )?;
    Ok(format!("worst channel error {:.3}%, wrong branch rejected", worst * 100.0))
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn noisy(trace: &PullTrace, seed: u64) -> PullTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loss = trace.loss_primary.iter().map(|v| (v + rng.random_range(-0.001..=0.001)).clamp(0.0, 1.0)).collect();
    PullTrace::new(trace.time_s.clone(), loss, trace.loss_reference.clone(), trace.metadata.clone()).unwrap()
}

fn c7_flame_classification() -> Check {
    let th = FlameThresholds::default();
    let ramp = load_pull_trace(&fixture("pull_ramp.csv")).map_err(|e| e.to_string())?;
    let flat = load_pull_trace(&fixture("pull_flat.csv")).map_err(|e| e.to_string())?;
    let h2 = classify_flame(&ramp, &th).map_err(|e| e.to_string())?;
    let d2 = classify_flame(&flat, &th).map_err(|e| e.to_string())?;
    ensure(h2.label == FlameLabel::H2Like, format!("ramp labelled {:?}", h2.label))?;
    ensure(d2.label == FlameLabel::D2Like, format!("flat labelled {:?}", d2.label))?;
    ensure(h2.reference_ok && d2.reference_ok, "reference channel flagged".into())?;
    for seed in 0..50 {
        let a = classify_flame(&noisy(&ramp, seed), &th).map_err(|e| e.to_string())?.label;
        let b = classify_flame(&noisy(&flat, seed), &th).map_err(|e| e.to_string())?.label;
        ensure(a == h2.label && b == d2.label, format!("seed {seed}: {a:?}/{b:?}"))?;
    }
    Ok(format!("ramp H2-like (final {:.2}%), flat D2-like, stable over 50 seeds", h2.final_loss * 100.0))
}

fn c8_overtones_and_window() -> Check {
    let c = overtone_center(2760.0, 1).map_err(|e| e.to_string())?;
    ensure(c == 1380.0, format!("overtone {c}"))?;
    let od = [AbsorptionBand::si_od(1.0)];
    let mut window = [0.0; 2];
    for lambda in [1389.0, 1480.0, 1539.0] {
        let t = transparency_check(&od, lambda, 1e-3).map_err(|e| e.to_string())?;
        ensure(t.clear, format!("{lambda} nm not clear"))?;
        window = t.window_nm.ok_or("no window")?;
        ensure(window[0] <= 1260.0 && window[1] >= 1660.0, format!("window {window:?}"))?;
    }
    Ok(format!("1380 nm exact; window [{:.0}, {:.0}] nm", window[0], window[1]))
}

fn c9_mode_oracles() -> Check {
    let start = Instant::now();
    let mut worst_n: f64 = 0.0;
    let mut worst_a: f64 = 0.0;
    for d in [400.0, 650.0, 1000.0] {
        let m = guided_mode(&FiberGeometry::nanofiber(d, 1389.0).unwrap()).map_err(|e| e.to_string())?;
        let fd = fd_effective_index_extrapolated(d, 1389.0, DEFAULT_SILICA_INDEX, 1.0, 100);
        let dense = trapezoid_mode_area(d, 1389.0, DEFAULT_SILICA_INDEX, 1.0, m.n_eff);
        worst_n = worst_n.max((m.n_eff - fd).abs());
        worst_a = worst_a.max(((m.a_eff_um2 - dense) / dense).abs());
        ensure((m.n_eff - fd).abs() < 1e-4, format!("d {d}: n_eff {} vs {fd}", m.n_eff))?;
        ensure(((m.a_eff_um2 - dense) / dense).abs() < 1e-3, format!("d {d}: A_eff {} vs {dense}", m.a_eff_um2))?;
    }
    let v = v_number(&FiberGeometry::nanofiber(650.0, 1389.0).unwrap());
    ensure((v - 1.53).abs() <= 0.01 && v < 2.405, format!("V = {v}"))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), format!("runtime {t:?}"))?;
    Ok(format!("|Δn_eff| ≤ {worst_n:.1e}, |ΔA/A| ≤ {worst_a:.1e}, V = {v:.4}, {t:.2?}"))
}

fn c10_cooperativity() -> Check {
    let s = CooperativityScenario::reference();
    let c = cooperativity(&s).map_err(|e| e.to_string())?;
    ensure(s.finesse.value.round() == 2027.0, format!("reference F {}", s.finesse.value))?;
    ensure((c.value - 90.0).abs() <= 1.0, format!("C = {}", c.value))?;
    let mut worst: f64 = 0.0;
    for f in [10.0, 1047.0, 2027.0, 5e4] {
        let c2 = cooperativity(&s.with_finesse(Quantity::exact(f))).map_err(|e| e.to_string())?.value;
        worst = worst.max(((c2 / c.value) / (f / s.finesse.value) - 1.0).abs());
        let back = required_finesse(c2, s.sigma0_over_aeff, s.prefactor).map_err(|e| e.to_string())?;
        worst = worst.max(((back - f) / f).abs());
    }
    ensure(worst < 1e-12, format!("linearity error {worst:e}"))?;
    Ok(format!("C = {:.3}, linearity error {worst:.1e}", c.value))
}

fn cli(args: &[&str], out: &Path) -> Result<(), String> {
    let mut argv = vec!["fibercav"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let parsed = Cli::try_parse_from(&argv).map_err(|e| e.to_string())?;
    run(&parsed).map(|_| ()).map_err(|e| e.to_string())
}

fn c11_determinism_round_trips() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        cli(&["synth", "--noise", "0.01", "--seed", "7"], d)?;
        cli(&["fit", d.join("spectrum.csv").to_str().unwrap(), "--emit-plot-data"], d)?;
        cli(&["pull", fixture("pull_ramp.csv").to_str().unwrap()], d)?;
        cli(&["modes"], d)?;
    }
    let reports = ["spectrum.csv", "synth.report.json", "fit.report.json", "spectrum.overlay.csv", "pull.report.json", "modes.report.json"];
    for name in reports {
        let (x, y) = (std::fs::read(a.join(name)), std::fs::read(b.join(name)));
        ensure(x.is_ok() && x.ok() == y.ok(), format!("{name} differs between identical runs"))?;
    }
    for name in ["synth", "fit", "pull", "modes"] {
        let ra = load_run_record(&a.join(format!("{name}.record.json"))).map_err(|e| e.to_string())?;
        let rb = load_run_record(&b.join(format!("{name}.record.json"))).map_err(|e| e.to_string())?;
        ensure(ra.record_id == rb.record_id, format!("{name} record ids differ"))?;
    }

    let spectrum = SpectrumTrace::read_csv_file(&a.join("spectrum.csv")).map_err(|e| e.to_string())?;
    let copy = tmp.path().join("copy.csv");
    spectrum.write_csv_file(&copy).map_err(|e| e.to_string())?;
    ensure(SpectrumTrace::read_csv_file(&copy).ok() == Some(spectrum), "spectrum CSV round trip".into())?;
    let pull = load_pull_trace(&fixture("pull_ramp.csv")).map_err(|e| e.to_string())?;
    let copy = tmp.path().join("pull.csv");
    write_pull_trace(&pull, &copy).map_err(|e| e.to_string())?;
    ensure(load_pull_trace(&copy).ok() == Some(pull), "pull CSV round trip".into())?;
    let fit_text = std::fs::read_to_string(a.join("fit.report.json")).unwrap();
    let fit: fibercav_cli::reports::FitReport = serde_json::from_str(&fit_text).map_err(|e| e.to_string())?;
    ensure(
        serde_json::to_value(&fit).unwrap() == serde_json::from_str::<serde_json::Value>(&fit_text).unwrap(),
        "fit report JSON round trip".into(),
    )?;

    let path = a.join("fit.record.json");
    let mut record: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let fin = &mut record["results"]["analysis"]["finesse"]["value"];
    *fin = serde_json::Value::from(fin.as_f64().unwrap() + 1.0);
    std::fs::write(&path, serde_json::to_string_pretty(&record).unwrap()).unwrap();
    ensure(
        matches!(load_run_record(&path), Err(CliError::Tampered { .. })),
        "edited record accepted".into(),
    )?;
    Ok("reports byte-identical, CSV/JSON round trips exact, edit detected".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("finesse-loss closure", c1_finesse_loss_closure),
        ("intrinsic finesse closure", c2_intrinsic_finesse),
        ("FSR/FWHM pipeline", c3_fsr_fwhm_pipeline),
        ("threshold pair F=1047 / 0.6%", c4_threshold_pair),
        ("synth-then-fit closure", c5_synth_then_fit),
        ("budget inverse closure", c6_budget_inverse),
        ("flame classification", c7_flame_classification),
        ("overtones and transparency window", c8_overtones_and_window),
        ("mode solver vs oracles", c9_mode_oracles),
        ("cooperativity reference", c10_cooperativity),
        ("determinism and round trips", c11_determinism_round_trips),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
