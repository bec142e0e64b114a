//! Pulling-loss time series: ingestion, flame classification and growth fits.
//!
//! CSV header `time_s,loss_primary[,loss_reference]` with a JSON sidecar of
//! the same stem holding the probe and reference wavelengths.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::lm::{levenberg_marquardt, LmOptions};
use crate::quantity::Quantity;

pub const DEFAULT_PROBE_NM: f64 = 1389.0;
pub const DEFAULT_REFERENCE_NM: f64 = 1550.0;
/// Minimum samples for classification and growth fits.
pub const MIN_TRACE_LEN: usize = 10;
/// Smoothing window as a fraction of the trace length.
pub const SMOOTHING_FRACTION: f64 = 0.05;
/// Loss above the baseline that marks the onset of exponential growth.
pub const ONSET_LEVEL: f64 = 0.01;
/// The reference channel is healthy while it stays below this loss.
pub const REFERENCE_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullMetadata {
    pub probe_wavelength_nm: f64,
    pub reference_wavelength_nm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flame_label: Option<String>,
}

impl Default for PullMetadata {
    fn default() -> Self {
        Self {
            probe_wavelength_nm: DEFAULT_PROBE_NM,
            reference_wavelength_nm: DEFAULT_REFERENCE_NM,
            flame_label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullTrace {
    pub time_s: Vec<f64>,
    pub loss_primary: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_reference: Option<Vec<f64>>,
    pub metadata: PullMetadata,
}

impl PullTrace {
    pub fn new(
        time_s: Vec<f64>,
        loss_primary: Vec<f64>,
        loss_reference: Option<Vec<f64>>,
        metadata: PullMetadata,
    ) -> Result<Self> {
        let n = time_s.len();
        if loss_primary.len() != n || loss_reference.as_ref().is_some_and(|r| r.len() != n) {
            return Err(Error::domain("pull trace columns differ in length"));
        }
        for (i, w) in time_s.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::domain(format!("time not strictly increasing at sample {}", i + 2)));
            }
        }
        let in_range = |v: &[f64]| v.iter().all(|x| (0.0..=1.0).contains(x));
        if !time_s.iter().all(|t| t.is_finite())
            || !in_range(&loss_primary)
            || !loss_reference.as_deref().is_none_or(in_range)
        {
            return Err(Error::domain("losses must lie in [0, 1] and times must be finite"));
        }
        Ok(Self {
            time_s,
            loss_primary,
            loss_reference,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.time_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time_s.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io {
            path: "<pull csv>".into(),
            source: std::io::Error::other(e),
        };
        if self.loss_reference.is_some() {
            w.write_record(["time_s", "loss_primary", "loss_reference"]).map_err(io)?;
        } else {
            w.write_record(["time_s", "loss_primary"]).map_err(io)?;
        }
        for i in 0..self.len() {
            let mut row = vec![self.time_s[i].to_string(), self.loss_primary[i].to_string()];
            if let Some(r) = &self.loss_reference {
                row.push(r[i].to_string());
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<pull csv>".into(),
            source: e,
        })
    }

    /// Reads the CSV body; rows are numbered from 1 after the header.
    pub fn read_csv<R: Read>(reader: R, source_name: &str, metadata: PullMetadata) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(source_name, 0, format!("unreadable header: {e}")))?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        let has_reference = match names.as_slice() {
            ["time_s", "loss_primary"] => false,
            ["time_s", "loss_primary", "loss_reference"] => true,
            _ => {
                return Err(Error::parse(
                    source_name,
                    0,
                    format!(
                        "expected header `time_s,loss_primary[,loss_reference]`, found `{}`",
                        names.join(",")
                    ),
                ))
            }
        };
        let mut time = Vec::new();
        let mut primary = Vec::new();
        let mut reference = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::parse(source_name, row, e.to_string()))?;
            let expected = if has_reference { 3 } else { 2 };
            if record.len() != expected {
                return Err(Error::parse(
                    source_name,
                    row,
                    format!("expected {expected} columns, found {}", record.len()),
                ));
            }
            let field = |k: usize, name: &str| -> Result<f64> {
                let v: f64 = record[k]
                    .parse()
                    .map_err(|_| Error::parse(source_name, row, format!("{name} `{}` is not a number", &record[k])))?;
                if !v.is_finite() {
                    return Err(Error::parse(source_name, row, format!("{name} is not finite")));
                }
                Ok(v)
            };
            let loss = |k: usize, name: &str| -> Result<f64> {
                let v = field(k, name)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::parse(source_name, row, format!("{name} {v} lies outside [0, 1]")));
                }
                Ok(v)
            };
            let t = field(0, "time_s")?;
            if let Some(&prev) = time.last() {
                if t <= prev {
                    return Err(Error::parse(
                        source_name,
                        row,
                        format!("time {t} s does not increase (previous row {prev} s)"),
                    ));
                }
            }
            time.push(t);
            primary.push(loss(1, "loss_primary")?);
            if has_reference {
                reference.push(loss(2, "loss_reference")?);
            }
        }
        Self::new(time, primary, has_reference.then_some(reference), metadata)
    }
}

/// Sidecar path: same stem, `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Loads a pull trace and its sidecar; defaults apply when the sidecar is absent.
pub fn load_pull_trace(path: &Path) -> Result<PullTrace> {
    let side = sidecar_path(path);
    let metadata = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| Error::Io {
            path: side.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Json {
            path: side.display().to_string(),
            source: e,
        })?
    } else {
        PullMetadata::default()
    };
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    PullTrace::read_csv(std::io::BufReader::new(file), &path.display().to_string(), metadata)
}

/// Writes the CSV and its sidecar.
pub fn write_pull_trace(trace: &PullTrace, path: &Path) -> Result<()> {
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |e: std::io::Error| Error::Io { path: p, source: e }
    };
    let file = std::fs::File::create(path).map_err(io(path))?;
    trace.write_csv(std::io::BufWriter::new(file))?;
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&trace.metadata).expect("metadata serializes");
    std::fs::write(&side, json + "\n").map_err(io(&side))
}

/// Centered moving average over `SMOOTHING_FRACTION` of the trace. Near
/// the ends the window shrinks symmetrically, so linear data pass through
/// unchanged.
pub fn smooth(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let width = ((SMOOTHING_FRACTION * n as f64).round() as usize).max(1);
    let half = width / 2;
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let window = &values[i - h..=i + h];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlameThresholds {
    pub final_loss_high: f64,
    pub final_loss_low: f64,
}

impl Default for FlameThresholds {
    fn default() -> Self {
        Self {
            final_loss_high: 0.04,
            final_loss_low: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlameLabel {
    #[serde(rename = "H2-like")]
    H2Like,
    #[serde(rename = "D2-like")]
    D2Like,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlameClassification {
    pub label: FlameLabel,
    pub final_loss: f64,
    pub monotone_growth_score: f64,
    pub reference_ok: bool,
}

/// Labels a trace H2-like (high, rising final loss), D2-like (stays low)
/// or indeterminate.
pub fn classify_flame(trace: &PullTrace, thresholds: &FlameThresholds) -> Result<FlameClassification> {
    if trace.len() < MIN_TRACE_LEN {
        return Err(Error::InsufficientData(format!(
            "classification needs at least {MIN_TRACE_LEN} samples, trace has {}",
            trace.len()
        )));
    }
    if !(thresholds.final_loss_low > 0.0 && thresholds.final_loss_low <= thresholds.final_loss_high) {
        return Err(Error::domain("need 0 < final_loss_low <= final_loss_high"));
    }
    let smoothed = smooth(&trace.loss_primary);
    let final_loss = *smoothed.last().expect("non-empty");
    let max_loss = smoothed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let rising = smoothed.windows(2).filter(|w| w[1] >= w[0]).count();
    let score = rising as f64 / (smoothed.len() - 1) as f64;
    let label = if final_loss > thresholds.final_loss_high && score > 0.7 {
        FlameLabel::H2Like
    } else if final_loss < thresholds.final_loss_low && max_loss < thresholds.final_loss_low {
        FlameLabel::D2Like
    } else {
        FlameLabel::Indeterminate
    };
    let reference_ok = trace
        .loss_reference
        .as_ref()
        .is_some_and(|r| r.iter().all(|&v| v < REFERENCE_LIMIT));
    Ok(FlameClassification {
        label,
        final_loss,
        monotone_growth_score: score,
        reference_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthModel {
    /// L(t) = b + r·t.
    Linear,
    /// L(t) = b + ONSET_LEVEL·exp(r(t − t_on)).
    ExponentialOnset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Model actually fitted.
    pub model: GrowthModel,
    /// Slope (1/s) for the linear model, growth rate (1/s) for the onset model.
    pub rate: Quantity,
    /// Loss at t = 0 (linear) or the pre-onset floor (onset model).
    pub baseline: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset_time_s: Option<Quantity>,
    pub residual_rms: f64,
    /// Set when an onset fit was requested but the data forced the linear model.
    pub fell_back_to_linear: bool,
}

fn fit_linear(t: &[f64], y: &[f64]) -> Result<GrowthFit> {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * tm;
    let ss: f64 = t.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let var = ss / (n - 2.0);
    Ok(GrowthFit {
        model: GrowthModel::Linear,
        rate: Quantity::new(slope, (var / sxx).sqrt())?,
        baseline: Quantity::new(intercept, (var * (1.0 / n + tm * tm / sxx)).sqrt())?,
        onset_time_s: None,
        residual_rms: (ss / n).sqrt(),
        fell_back_to_linear: false,
    })
}

fn fit_onset(t: &[f64], y: &[f64]) -> Option<GrowthFit> {
    let floor = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(top - floor > 2.0 * ONSET_LEVEL) {
        return None;
    }
    // Log-linear start on the samples clearly above the floor.
    let (lt, ly): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(y)
        .filter(|(_, v)| **v - floor > 0.2 * ONSET_LEVEL)
        .map(|(a, v)| (*a, (v - floor).ln()))
        .unzip();
    if lt.len() < 3 {
        return None;
    }
    let start = fit_linear(&lt, &ly).ok()?;
    let rate0 = start.rate.value;
    if !(rate0 > 0.0) {
        return None;
    }
    let t_on0 = (ONSET_LEVEL.ln() - start.baseline.value) / rate0;

    // Parameters scaled to order one: [b, r·τ, t_on/τ] with τ the time span.
    let tau = t[t.len() - 1] - t[0];
    let model = |p: &[f64]| {
        let m = t.len();
        let mut r = DVector::zeros(m);
        let mut j = DMatrix::zeros(m, 3);
        for i in 0..m {
            let x = t[i] / tau;
            let e = ONSET_LEVEL * (p[1] * (x - p[2])).exp();
            r[i] = p[0] + e - y[i];
            j[(i, 0)] = 1.0;
            j[(i, 1)] = e * (x - p[2]);
            j[(i, 2)] = -e * p[1];
        }
        (r, j)
    };
    let sol = levenberg_marquardt(model, |p| p[1] > 0.0, &[floor, rate0 * tau, t_on0 / tau], &LmOptions::default())
        .ok()?;
    let cov = sol.covariance();
    let p = &sol.params;
    let sd = |k: usize| cov[(k, k)].max(0.0).sqrt();
    Some(GrowthFit {
        model: GrowthModel::ExponentialOnset,
        rate: Quantity::new(p[1] / tau, sd(1) / tau).ok()?,
        baseline: Quantity::new(p[0], sd(0)).ok()?,
        onset_time_s: Some(Quantity::new(p[2] * tau, sd(2) * tau).ok()?),
        residual_rms: (2.0 * sol.cost / t.len() as f64).sqrt(),
        fell_back_to_linear: false,
    })
}

/// Least-squares growth fit of the smoothed loss against time.
pub fn fit_loss_growth(trace: &PullTrace, model: GrowthModel) -> Result<GrowthFit> {
    if trace.len() < MIN_TRACE_LEN {
        return Err(Error::InsufficientData(format!(
            "growth fit needs at least {MIN_TRACE_LEN} samples, trace has {}",
            trace.len()
        )));
    }
    let y = smooth(&trace.loss_primary);
    match model {
        GrowthModel::Linear => fit_linear(&trace.time_s, &y),
        GrowthModel::ExponentialOnset => match fit_onset(&trace.time_s, &y) {
            Some(fit) => Ok(fit),
            None => {
                let mut fit = fit_linear(&trace.time_s, &y)?;
                fit.fell_back_to_linear = true;
                Ok(fit)
            }
        },
    }
}
