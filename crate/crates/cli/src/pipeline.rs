//! Subcommand execution: config overrides, module chains, reports and records.

use std::path::{Path, PathBuf};

use fibercav_core::absorption::{
    classify_flame, fit_loss_growth, load_pull_trace, smooth, transparency_check, FlameThresholds, GrowthModel,
};
use fibercav_core::budget::budget;
use fibercav_core::coop::{cooperativity, CooperativityScenario};
use fibercav_core::fit::{analyze_spectrum, AnalysisOptions, FitOptions, LmOptions, Polarity};
use fibercav_core::mode::{effective_mode_area, solve_he11, FiberGeometry, GuidedMode};
use fibercav_core::spectral::{cavity_spectrum, exact_on_resonance, CavityModel, Channel, SpectrumTrace};
use fibercav_core::Quantity;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{BudgetArgs, Cli, Command};
use crate::config::ToolConfig;
use crate::error::CliError;
use crate::ingest::parse_spectrum_csv;
use crate::record::{load_run_record, write_run_record, InputFile, RunRecord};
use crate::reports::*;

/// Result of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub record: RunRecord,
    pub record_path: PathBuf,
    pub written: Vec<PathBuf>,
    /// Text printed to stdout.
    pub summary: String,
}

/// Effective configuration: file or defaults, then command-line overrides.
pub fn effective_config(cli: &Cli) -> Result<ToolConfig, CliError> {
    let (mut config, _) = ToolConfig::resolve(cli.global.config.as_deref())?;
    let g = &cli.global;
    if let Some(seed) = g.seed {
        config.run.seed = seed;
    }
    if let Some(ng) = g.group_index {
        config.spectrum.group_index = ng;
    }
    if g.normalize {
        config.spectrum.normalize = true;
    }
    match &cli.command {
        Command::Synth { noise } => {
            if let Some(n) = noise {
                config.synth.noise = *n;
            }
        }
        Command::Fit { channel, .. } => {
            if let Some(c) = channel {
                config.fit.channel = (*c).into();
            }
        }
        Command::Budget(b) => {
            if let Some(r) = b.regime {
                config.budget.regime_1 = r.into();
                config.budget.regime_2 = r.into();
            }
            if let Some(r) = b.regime1 {
                config.budget.regime_1 = r.into();
            }
            if let Some(r) = b.regime2 {
                config.budget.regime_2 = r.into();
            }
        }
        Command::Pull { model, .. } => {
            if let Some(m) = model {
                config.pull.growth_model = (*m).into();
            }
        }
        Command::Modes {
            diameter_nm,
            wavelength_nm,
        } => {
            if let Some(d) = diameter_nm {
                config.mode.diameter_nm = *d;
            }
            if let Some(l) = wavelength_nm {
                config.mode.wavelength_nm = *l;
            }
        }
        Command::Coop {
            finesse,
            finesse_sigma,
            ratio,
            prefactor,
        } => {
            if let Some(f) = finesse {
                config.coop.finesse = *f;
                config.coop.finesse_sigma = 0.0;
            }
            if let Some(s) = finesse_sigma {
                config.coop.finesse_sigma = *s;
            }
            if let Some(r) = ratio {
                config.coop.sigma0_over_aeff = *r;
            }
            if let Some(k) = prefactor {
                config.coop.prefactor = *k;
            }
        }
        Command::Report { .. } => {}
    }
    if config.fit.background.is_none() {
        config.fit.background = Some(config.background());
    }
    config.validate()?;
    Ok(config)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(CliError::io(path))
}

fn to_value<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report serializes")
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned())
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Sorted `*.csv` files of a directory.
fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Usage(format!("no .csv files in {}", dir.display())));
    }
    Ok(files)
}

fn write_csv_rows(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    let wrap = |e: csv::Error| CliError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(wrap)?;
    }
    w.flush().map_err(CliError::io(path))
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let config = effective_config(cli)?;
    let out = &cli.global.out;
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let plots = cli.global.emit_plot_data;
    let (name, inputs, results, written, summary) = match &cli.command {
        Command::Synth { .. } => synth(&config, out)?,
        Command::Fit { input, batch, .. } => per_file("fit", input, batch, out, |p| fit_file(&config, p, out, plots))?,
        Command::Budget(args) => run_budget(&config, args, out)?,
        Command::Pull { input, batch, .. } => {
            per_file("pull", input, batch, out, |p| pull_file(&config, p, out, plots))?
        }
        Command::Modes { .. } => modes(&config, out, plots)?,
        Command::Coop { .. } => coop(&config, out)?,
        Command::Report { records, batch } => report(records, batch, out)?,
    };
    let record = RunRecord::new(name, inputs, &config, results);
    let record_path = out.join(format!("{name}.record.json"));
    write_run_record(&record, &record_path)?;
    Ok(Outcome {
        record,
        record_path,
        written,
        summary,
    })
}

type Stage = (&'static str, Vec<InputFile>, Value, Vec<PathBuf>, String);

struct FileResult {
    input: InputFile,
    report: Value,
    written: Vec<PathBuf>,
    summary: String,
}

/// One file, or every CSV of a batch directory processed in parallel.
fn per_file(
    name: &'static str,
    input: &Option<PathBuf>,
    batch: &Option<PathBuf>,
    out: &Path,
    job: impl Fn(&Path) -> Result<FileResult, CliError> + Sync,
) -> Result<Stage, CliError> {
    match (input, batch) {
        (Some(path), None) => {
            let r = job(path)?;
            let report_path = out.join(format!("{name}.report.json"));
            write_json(&r.report, &report_path)?;
            let mut written = vec![report_path];
            written.extend(r.written);
            Ok((name, vec![r.input], r.report, written, r.summary))
        }
        (None, Some(dir)) => {
            let files = csv_files(dir)?;
            let results: Vec<Result<FileResult, CliError>> = files.par_iter().map(|p| job(p)).collect();
            let mut inputs = Vec::new();
            let mut reports = serde_json::Map::new();
            let mut written = Vec::new();
            let mut lines = Vec::new();
            let mut first_error = None;
            for (path, result) in files.iter().zip(results) {
                match result {
                    Ok(r) => {
                        let report_path = out.join(format!("{}.{name}.report.json", stem(path)));
                        write_json(&r.report, &report_path)?;
                        written.push(report_path);
                        written.extend(r.written);
                        inputs.push(r.input);
                        reports.insert(stem(path), r.report);
                        lines.push(r.summary);
                    }
                    Err(e) => {
                        lines.push(format!("{}: {e}", file_name(path)));
                        first_error.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_error {
                return Err(e);
            }
            Ok((name, inputs, json!({ "files": reports }), written, lines.join("\n")))
        }
        _ => Err(CliError::Usage("give one input file or --batch DIR".into())),
    }
}

fn synth(config: &ToolConfig, out: &Path) -> Result<Stage, CliError> {
    let s = &config.synth;
    let ng = config.spectrum.group_index;
    let model = CavityModel::from_losses(s.t1, s.t2, s.alpha_int, 27.0, ng)?.with_fsr(s.fsr_hz)?;
    let step = model.fwhm_hz() / s.samples_per_fwhm;
    let start = -0.5 * model.fsr_hz();
    let n = (s.resonances as f64 * model.fsr_hz() / step).round() as usize;
    let grid: Vec<f64> = (0..n).map(|i| start + i as f64 * step).collect();
    let mut trace = cavity_spectrum(&model, &grid)?;
    if s.noise > 0.0 {
        let peak = trace.transmission.iter().cloned().fold(0.0, f64::max);
        let normal = Normal::new(0.0, s.noise * peak).map_err(|e| CliError::Config(format!("synth.noise: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
        for v in trace.transmission.iter_mut() {
            *v += normal.sample(&mut rng);
        }
        if let Some(r) = trace.reflection.as_mut() {
            for v in r.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let spectrum_path = out.join("spectrum.csv");
    trace.write_csv_file(&spectrum_path)?;
    let report = SynthReport {
        on_resonance: exact_on_resonance(&model)?,
        fsr_hz: model.fsr_hz(),
        fwhm_hz: model.fwhm_hz(),
        finesse: model.finesse(),
        total_loss: model.total_loss(),
        seed: config.run.seed,
        noise: s.noise,
        samples: trace.len(),
        model,
    };
    let report_path = out.join("synth.report.json");
    write_json(&report, &report_path)?;
    let summary = summarize_synth(&report);
    Ok(("synth", vec![], to_value(&report), vec![spectrum_path, report_path], summary))
}

fn analysis_options(config: &ToolConfig) -> AnalysisOptions {
    let channel = config.fit.channel;
    AnalysisOptions {
        channel,
        polarity: match channel {
            Channel::Transmission => Polarity::Peak,
            Channel::Reflection => Polarity::Dip,
        },
        prominence: config.fit.prominence,
        window_multiple: config.fit.window_multiple,
        fit: FitOptions {
            background: config.background(),
            lm: LmOptions {
                max_iterations: config.fit.max_iterations,
                ..LmOptions::default()
            },
            jitter_seed: None,
        },
        group_index: config.spectrum.group_index,
    }
}

fn fit_file(config: &ToolConfig, path: &Path, out: &Path, plots: bool) -> Result<FileResult, CliError> {
    let input = InputFile::from_path(path)?;
    let trace = parse_spectrum_csv(path, config.spectrum.normalize)?;
    let options = analysis_options(config);
    let analysis = analyze_spectrum(&trace, &options)?;
    let mut written = Vec::new();
    if plots {
        let overlay = out.join(format!("{}.overlay.csv", stem(path)));
        write_overlay(&trace, &options, &analysis, &overlay)?;
        written.push(overlay);
    }
    let report = FitReport {
        source: input.name.clone(),
        channel: options.channel,
        normalized: config.spectrum.normalize,
        rendered: render_fit(&analysis),
        warnings: trace.resolution_warning.iter().cloned().collect(),
        analysis,
    };
    Ok(FileResult {
        summary: summarize_fit(&report),
        report: to_value(&report),
        input,
        written,
    })
}

/// Data and fitted model inside each fit window.
fn write_overlay(
    trace: &SpectrumTrace,
    options: &AnalysisOptions,
    analysis: &fibercav_core::fit::SpectrumAnalysis,
    path: &Path,
) -> Result<(), CliError> {
    let data = trace.channel(options.channel).unwrap_or(&trace.transmission);
    let mut rows = Vec::new();
    for (k, fit) in analysis.peaks.fits.iter().enumerate() {
        for (i, &f) in trace.freq_hz.iter().enumerate() {
            if f >= fit.window_hz[0] && f <= fit.window_hz[1] {
                rows.push(vec![k as f64, f, data[i], fit.evaluate(f)]);
            }
        }
    }
    write_csv_rows(path, &["resonance", "freq_hz", "measured", "model"], rows.into_iter())
}

fn run_budget(config: &ToolConfig, args: &BudgetArgs, out: &Path) -> Result<Stage, CliError> {
    let inputs = BudgetInputs {
        finesse: Quantity::new(args.finesse, args.finesse_sigma)?,
        r1: Quantity::new(args.r1, args.r1_sigma)?,
        r2: Quantity::new(args.r2, args.r2_sigma)?,
    };
    let b = budget(
        inputs.finesse,
        inputs.r1,
        inputs.r2,
        config.budget.regime_1,
        config.budget.regime_2,
    )?;
    let report = BudgetReport {
        inputs,
        rendered: render_budget(&b),
        budget: b,
    };
    let path = out.join("budget.report.json");
    write_json(&report, &path)?;
    let summary = summarize_budget(&report);
    Ok(("budget", vec![], to_value(&report), vec![path], summary))
}

fn pull_file(config: &ToolConfig, path: &Path, out: &Path, plots: bool) -> Result<FileResult, CliError> {
    let input = InputFile::from_path(path)?;
    let trace = load_pull_trace(path)?;
    let thresholds = FlameThresholds {
        final_loss_high: config.pull.final_loss_high,
        final_loss_low: config.pull.final_loss_low,
    };
    let classification = classify_flame(&trace, &thresholds)?;
    let growth = fit_loss_growth(&trace, config.pull.growth_model)?;
    let bands = config.bands()?;
    let threshold = config.absorption.threshold;
    let probe_transparency = transparency_check(&bands, trace.metadata.probe_wavelength_nm, threshold)?;
    let reference_transparency = transparency_check(&bands, trace.metadata.reference_wavelength_nm, threshold)?;
    let mut written = Vec::new();
    if plots {
        let plot = out.join(format!("{}.growth.csv", stem(path)));
        let smoothed = smooth(&trace.loss_primary);
        let model = |t: f64| match growth.model {
            GrowthModel::Linear => growth.baseline.value + growth.rate.value * t,
            GrowthModel::ExponentialOnset => {
                let t_on = growth.onset_time_s.map_or(0.0, |q| q.value);
                growth.baseline.value + fibercav_core::absorption::pull::ONSET_LEVEL * (growth.rate.value * (t - t_on)).exp()
            }
        };
        let rows = (0..trace.len()).map(|i| {
            let t = trace.time_s[i];
            vec![t, trace.loss_primary[i], smoothed[i], model(t)]
        });
        write_csv_rows(&plot, &["time_s", "loss_primary", "smoothed", "model"], rows)?;
        written.push(plot);
    }
    let report = PullReport {
        source: input.name.clone(),
        samples: trace.len(),
        metadata: trace.metadata,
        classification,
        growth,
        probe_transparency,
        reference_transparency,
    };
    Ok(FileResult {
        summary: summarize_pull(&report),
        report: to_value(&report),
        input,
        written,
    })
}

fn modes(config: &ToolConfig, out: &Path, plots: bool) -> Result<Stage, CliError> {
    let m = &config.mode;
    let geom = FiberGeometry::new(m.diameter_nm, m.silica_index, m.cladding_index, m.wavelength_nm)?;
    let mode = solve_he11(&geom)?;
    let area = effective_mode_area(&mode)?;
    let report = GuidedMode {
        v_number: fibercav_core::mode::v_number(&geom),
        n_eff: mode.effective_index,
        a_eff_um2: area.area_um2,
        surface_intensity_ratio: area.surface_intensity_ratio,
        solver_tolerances: fibercav_core::mode::SolverTolerances {
            root: fibercav_core::mode::ROOT_TOLERANCE,
            quadrature_relative: fibercav_core::mode::QUADRATURE_TOLERANCE,
        },
    };
    let path = out.join("modes.report.json");
    write_json(&report, &path)?;
    let mut written = vec![path];
    if plots {
        let profile = out.join("mode-profile.csv");
        let a = m.diameter_nm * 1e-3 / 2.0;
        let peak = mode.intensity(0.0);
        let rows = (0..=300).map(|i| {
            let r = 3.0 * a * i as f64 / 300.0;
            vec![r, mode.intensity(r) / peak]
        });
        write_csv_rows(&profile, &["r_um", "intensity"], rows)?;
        written.push(profile);
    }
    let summary = summarize_mode(&report);
    Ok(("modes", vec![], to_value(&report), written, summary))
}

fn coop(config: &ToolConfig, out: &Path) -> Result<Stage, CliError> {
    let c = &config.coop;
    let mut scenario =
        CooperativityScenario::new(c.sigma0_over_aeff, Quantity::new(c.finesse, c.finesse_sigma)?, c.prefactor)?;
    let reference = CooperativityScenario::reference();
    if scenario.sigma0_over_aeff == reference.sigma0_over_aeff && scenario.prefactor == reference.prefactor {
        scenario.label = reference.label;
    }
    let report = CoopReport {
        k: scenario.prefactor,
        sigma0_over_aeff: scenario.sigma0_over_aeff,
        finesse: scenario.finesse,
        cooperativity: cooperativity(&scenario)?,
        label: scenario.label,
    };
    let path = out.join("coop.report.json");
    write_json(&report, &path)?;
    let summary = summarize_coop(&report);
    Ok(("coop", vec![], to_value(&report), vec![path], summary))
}

/// Text lines for one verified record.
pub fn summarize_record(record: &RunRecord) -> Result<Vec<String>, CliError> {
    let bad = |e: serde_json::Error| CliError::Usage(format!("record {} has malformed results: {e}", record.record_id));
    let short = &record.record_id[..record.record_id.len().min(12)];
    let mut lines = vec![format!("[{} {short}]", record.subcommand)];
    let files = |v: &Value| -> Vec<Value> {
        match v.get("files").and_then(Value::as_object) {
            Some(map) => map.values().cloned().collect(),
            None => vec![v.clone()],
        }
    };
    match record.subcommand.as_str() {
        "synth" => lines.push(summarize_synth(&serde_json::from_value(record.results.clone()).map_err(bad)?)),
        "fit" => {
            for v in files(&record.results) {
                lines.push(summarize_fit(&serde_json::from_value(v).map_err(bad)?));
            }
        }
        "budget" => lines.push(summarize_budget(&serde_json::from_value(record.results.clone()).map_err(bad)?)),
        "pull" => {
            for v in files(&record.results) {
                lines.push(summarize_pull(&serde_json::from_value(v).map_err(bad)?));
            }
        }
        "modes" => lines.push(summarize_mode(&serde_json::from_value(record.results.clone()).map_err(bad)?)),
        "coop" => lines.push(summarize_coop(&serde_json::from_value(record.results.clone()).map_err(bad)?)),
        "report" => lines.push(format!(
            "summary of {} records",
            record.results.get("records").and_then(Value::as_array).map_or(0, Vec::len)
        )),
        other => return Err(CliError::Usage(format!("unknown subcommand `{other}` in record"))),
    }
    Ok(lines)
}

fn report(records: &[PathBuf], batch: &Option<PathBuf>, out: &Path) -> Result<Stage, CliError> {
    let paths: Vec<PathBuf> = match batch {
        Some(dir) => {
            let mut p: Vec<PathBuf> = std::fs::read_dir(dir)
                .map_err(CliError::io(dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.to_string_lossy().ends_with(".record.json") && !p.ends_with("report.record.json"))
                .collect();
            p.sort();
            p
        }
        None => records.to_vec(),
    };
    if paths.is_empty() {
        return Err(CliError::Usage("no run records to report".into()));
    }
    let mut inputs = Vec::new();
    let mut ids = Vec::new();
    let mut lines = Vec::new();
    for p in &paths {
        let record = load_run_record(p)?;
        inputs.push(InputFile::from_path(p)?);
        lines.extend(summarize_record(&record)?);
        ids.push(record.record_id);
    }
    let text = lines.join("\n") + "\n";
    let path = out.join("report.txt");
    std::fs::write(&path, &text).map_err(CliError::io(&path))?;
    Ok((
        "report",
        inputs,
        json!({ "records": ids, "summary": text }),
        vec![path],
        text.trim_end().to_string(),
    ))
}
