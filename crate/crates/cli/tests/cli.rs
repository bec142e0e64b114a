use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fibercav_cli::reports::{BudgetReport, FitReport, PullReport};
use fibercav_cli::{load_run_record, CliError};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn fibercav(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibercav"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FIBERCAV_CONFIG")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_then_fit_recovers_finesse() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path();
    assert_eq!(code(&fibercav(&["synth"], o)), 0);
    let synth: Value = read(&o.join("synth.report.json"));
    let alpha = synth["total_loss"].as_f64().unwrap();
    let fit = fibercav(&["fit", o.join("spectrum.csv").to_str().unwrap(), "--emit-plot-data"], o);
    assert_eq!(code(&fit), 0, "{}", String::from_utf8_lossy(&fit.stderr));
    let report: FitReport = read(&o.join("fit.report.json"));
    assert_eq!(report.analysis.peaks.len(), 3);
    let f = report.analysis.finesse.unwrap().value;
    let target = 2.0 * std::f64::consts::PI / alpha;
    assert!(((f - target) / target).abs() < 0.01, "{f} vs {target}");
    assert!(o.join("spectrum.overlay.csv").exists());
    let text = std::fs::read_to_string(o.join("fit.report.json")).unwrap();
    let back: FitReport = serde_json::from_str(&text).unwrap();
    assert_eq!(serde_json::to_value(&back).unwrap(), serde_json::from_str::<Value>(&text).unwrap());
    assert_eq!(back, report);
}

#[test]
fn perfect_reflectors_give_zero_transmittance() {
    let dir = tempfile::tempdir().unwrap();
    let out = fibercav(&["budget", "--finesse", "1310", "--r1", "1", "--r2", "1"], dir.path());
    assert_eq!(code(&out), 0);
    let r: BudgetReport = read(&dir.path().join("budget.report.json"));
    assert_eq!(r.budget.t1.value, 0.0);
    assert_eq!(r.budget.t2.value, 0.0);
    assert!((r.budget.alpha_int.value - r.budget.alpha_tot.value).abs() < 1e-15);
}

#[test]
fn wrong_branch_exits_with_inconsistency() {
    let dir = tempfile::tempdir().unwrap();
    let out = fibercav(&["budget", "--finesse", "1310", "--r1", "0.36", "--r2", "0.36", "--regime", "over"], dir.path());
    assert_eq!(code(&out), 4);
    let err = stderr_json(&out);
    assert_eq!(err["error"], "measurement_inconsistency");
    assert!(err["message"].as_str().unwrap().contains("overcoupled"));
    let mixed = fibercav(
        &["budget", "--finesse", "1310", "--r1", "0.36", "--r2", "0.36", "--regime", "over", "--regime1", "under", "--regime2", "under"],
        dir.path(),
    );
    assert_eq!(code(&mixed), 0);
}

#[test]
fn pull_fixtures_classify() {
    let dir = tempfile::tempdir().unwrap();
    let flat = fibercav(&["pull", fixture("pull_flat.csv").to_str().unwrap()], dir.path());
    assert_eq!(code(&flat), 0);
    let r: PullReport = read(&dir.path().join("pull.report.json"));
    assert_eq!(serde_json::to_value(r.classification.label).unwrap(), "D2-like");
    assert!(r.classification.reference_ok);
    assert!(r.probe_transparency.clear);
    assert_eq!(r.metadata.flame_label.as_deref(), Some("D2-O2"));

    let ramp = fibercav(&["pull", fixture("pull_ramp.csv").to_str().unwrap(), "--emit-plot-data"], dir.path());
    assert_eq!(code(&ramp), 0);
    let r: PullReport = read(&dir.path().join("pull.report.json"));
    assert_eq!(serde_json::to_value(r.classification.label).unwrap(), "H2-like");
    assert!(dir.path().join("pull_ramp.growth.csv").exists());
}

#[test]
fn batch_pull_processes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = fibercav(&["pull", "--batch", fixture("").to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let record = load_run_record(&dir.path().join("pull.record.json")).unwrap();
    assert_eq!(record.inputs.len(), 2);
    assert!(dir.path().join("pull_flat.pull.report.json").exists());
    assert!(dir.path().join("pull_ramp.pull.report.json").exists());
}

#[test]
fn duplicated_frequency_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("dup.csv");
    std::fs::write(&csv, "freq_offset_hz,transmission\n0,0.1\n1,0.2\n1,0.3\n2,0.2\n").unwrap();
    let out = fibercav(&["fit", csv.to_str().unwrap()], dir.path());
    assert_eq!(code(&out), 2);
    let err = stderr_json(&out);
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains("row 3"), "{err}");
}

#[test]
fn volt_traces_need_normalize() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path();
    assert_eq!(code(&fibercav(&["synth"], o)), 0);
    let text = std::fs::read_to_string(o.join("spectrum.csv")).unwrap();
    let mut scaled = String::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.starts_with('#') {
            scaled.push_str(line);
        } else {
            let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
            scaled.push_str(&format!("{},{},{}", v[0], v[1] * 3.3, v[2] * 2.1));
        }
        scaled.push('\n');
    }
    let volts = o.join("volts.csv");
    std::fs::write(&volts, scaled).unwrap();
    assert_eq!(code(&fibercav(&["fit", volts.to_str().unwrap()], o)), 2);
    let ok = fibercav(&["fit", volts.to_str().unwrap(), "--normalize"], o);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path();
    assert_eq!(code(&fibercav(&["synth"], o)), 0);
    let config = o.join("tight.toml");
    std::fs::write(&config, "[fit]\nmax_iterations = 1\n").unwrap();
    let out = fibercav(&["fit", o.join("spectrum.csv").to_str().unwrap(), "--config", config.to_str().unwrap()], o);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "fit_failure");
}

#[test]
fn config_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("env.toml");
    std::fs::write(&config, "[mode]\ndiameter_nm = 400.0\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fibercav"))
        .args(["modes", "--out"])
        .arg(dir.path())
        .env("FIBERCAV_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let record = load_run_record(&dir.path().join("modes.record.json")).unwrap();
    assert_eq!(record.config_snapshot.mode.diameter_nm, 400.0);

    std::fs::write(&config, "[mode]\ndiameter_nm = -4.0\n").unwrap();
    let bad = fibercav(&["modes", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(code(&bad), 2);
    assert!(stderr_json(&bad)["message"].as_str().unwrap().contains("mode.diameter_nm"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert_eq!(code(&fibercav(&["synth", "--noise", "0.01", "--seed", "11"], d)), 0);
        assert_eq!(code(&fibercav(&["fit", d.join("spectrum.csv").to_str().unwrap()], d)), 0);
    }
    for name in ["spectrum.csv", "synth.report.json", "fit.report.json"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
    let ra = load_run_record(&a.path().join("fit.record.json")).unwrap();
    let rb = load_run_record(&b.path().join("fit.record.json")).unwrap();
    assert_eq!(ra.record_id, rb.record_id);

    let c = tempfile::tempdir().unwrap();
    assert_eq!(code(&fibercav(&["synth", "--noise", "0.01", "--seed", "12"], c.path())), 0);
    assert_ne!(
        std::fs::read(a.path().join("spectrum.csv")).unwrap(),
        std::fs::read(c.path().join("spectrum.csv")).unwrap()
    );
}

#[test]
fn report_rejects_tampered_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path();
    assert_eq!(code(&fibercav(&["coop"], o)), 0);
    assert_eq!(code(&fibercav(&["modes"], o)), 0);
    let summary = fibercav(&["report", "--batch", o.to_str().unwrap()], o);
    assert_eq!(code(&summary), 0);
    let text = String::from_utf8(summary.stdout).unwrap();
    assert!(text.contains("C = 90"), "{text}");

    let path = o.join("coop.record.json");
    let mut record: Value = read(&path);
    record["results"]["K"] = Value::from(0.7);
    std::fs::write(&path, serde_json::to_string_pretty(&record).unwrap()).unwrap();
    assert!(matches!(load_run_record(&path), Err(CliError::Tampered { .. })));
    let out = fibercav(&["report", path.to_str().unwrap()], o);
    assert_eq!(code(&out), 2);
    assert_eq!(stderr_json(&out)["error"], "tampered_record");
}
