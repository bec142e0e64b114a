//! Spectrum ingestion and plateau normalization.

use std::path::Path;

use fibercav_core::spectral::SpectrumTrace;

use crate::error::CliError;

/// Samples may exceed [0, 1] by this much before normalization is required.
pub const RANGE_MARGIN: f64 = 0.1;

/// Linear-interpolated percentile, `p` in [0, 1].
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Scales each channel so its plateau reads 1: the transmission maximum
/// (resonance peaks) and the reflection 95th percentile (off-resonance level).
pub fn normalize(trace: &SpectrumTrace) -> Result<SpectrumTrace, CliError> {
    let scale = |v: &[f64], level: f64, name: &str| -> Result<Vec<f64>, CliError> {
        if level.is_nan() || level <= 0.0 {
            return Err(CliError::Usage(format!("cannot normalize {name}: plateau level {level} is not positive")));
        }
        Ok(v.iter().map(|x| x / level).collect())
    };
    let t_level = trace.transmission.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let transmission = scale(&trace.transmission, t_level, "transmission")?;
    let reflection = match &trace.reflection {
        Some(r) => Some(scale(r, percentile(r, 0.95), "reflection")?),
        None => None,
    };
    let mut out = SpectrumTrace::new(trace.freq_hz.clone(), transmission, reflection)?;
    out.resolution_warning = trace.resolution_warning.clone();
    Ok(out)
}

/// Reads a spectrum CSV, normalizing it or checking its range.
pub fn parse_spectrum_csv(path: &Path, normalize_levels: bool) -> Result<SpectrumTrace, CliError> {
    let trace = SpectrumTrace::read_csv_file(path)?;
    if trace.len() < 2 {
        return Err(fibercav_core::Error::InsufficientData(format!(
            "{}: spectrum has {} samples",
            path.display(),
            trace.len()
        ))
        .into());
    }
    if normalize_levels {
        normalize(&trace)
    } else {
        trace.check_unit_range(RANGE_MARGIN)?;
        Ok(trace)
    }
}
