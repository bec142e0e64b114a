//! Candidate resonances by topographic prominence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Channel, SpectrumTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Peak,
    Dip,
}

impl Polarity {
    fn sign(self) -> f64 {
        match self {
            Polarity::Peak => 1.0,
            Polarity::Dip => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakCandidate {
    pub index: usize,
    pub center_hz: f64,
    /// Height above the higher of the two bases, in data units.
    pub prominence: f64,
    /// Width at half prominence, interpolated between samples.
    pub fwhm_hz: f64,
}

/// Local extrema whose prominence exceeds `prominence_threshold` times the
/// data range, ordered by frequency.
pub fn detect_peaks(
    trace: &SpectrumTrace,
    channel: Channel,
    polarity: Polarity,
    prominence_threshold: f64,
) -> Result<Vec<PeakCandidate>> {
    if !(prominence_threshold > 0.0 && prominence_threshold < 1.0) {
        return Err(Error::domain(format!(
            "prominence threshold must lie in (0, 1), got {prominence_threshold}"
        )));
    }
    let data = trace
        .channel(channel)
        .ok_or_else(|| Error::domain("trace has no reflection channel"))?;
    let y: Vec<f64> = data.iter().map(|v| v * polarity.sign()).collect();
    Ok(find_prominent(&trace.freq_hz, &y, prominence_threshold))
}

fn find_prominent(x: &[f64], y: &[f64], fraction: f64) -> Vec<PeakCandidate> {
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return Vec::new();
    }
    let threshold = fraction * range;

    let mut out = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] && y[i] - lo >= threshold {
            // Walk across a flat top; the peak sits at its middle.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let idx = (i + j) / 2;
                let prominence = prominence_at(y, idx);
                if prominence >= threshold {
                    out.push(PeakCandidate {
                        index: idx,
                        center_hz: x[idx],
                        prominence,
                        fwhm_hz: half_prominence_width(x, y, idx, prominence),
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn prominence_at(y: &[f64], idx: usize) -> f64 {
    let top = y[idx];
    let mut left_min = top;
    for k in (0..idx).rev() {
        if y[k] > top {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = top;
    for &v in &y[idx + 1..] {
        if v > top {
            break;
        }
        right_min = right_min.min(v);
    }
    top - left_min.max(right_min)
}

pub(crate) fn half_prominence_width(x: &[f64], y: &[f64], idx: usize, prominence: f64) -> f64 {
    let level = y[idx] - 0.5 * prominence;
    let crossing = |a: usize, b: usize| {
        let t = (level - y[a]) / (y[b] - y[a]);
        x[a] + t * (x[b] - x[a])
    };
    let left = (0..idx)
        .rev()
        .find(|&k| y[k] <= level)
        .map_or(x[0], |k| crossing(k, k + 1));
    let right = (idx + 1..y.len())
        .find(|&k| y[k] <= level)
        .map_or(x[x.len() - 1], |k| crossing(k - 1, k));
    right - left
}

/// Drops candidates whose windows (`center ± multiple·fwhm`) overlap a
/// window of a more prominent candidate.
pub fn resolve_overlaps(mut candidates: Vec<PeakCandidate>, window_multiple: f64) -> Vec<PeakCandidate> {
    candidates.sort_by(|a, b| b.prominence.total_cmp(&a.prominence).then(a.index.cmp(&b.index)));
    let mut kept: Vec<PeakCandidate> = Vec::new();
    for c in candidates {
        let (lo, hi) = window_of(&c, window_multiple);
        let clash = kept.iter().any(|k| {
            let (klo, khi) = window_of(k, window_multiple);
            lo < khi && klo < hi
        });
        if !clash {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.center_hz.total_cmp(&b.center_hz));
    kept
}

/// Fit window `center ± multiple·fwhm` for a candidate.
pub fn window_of(c: &PeakCandidate, multiple: f64) -> (f64, f64) {
    (c.center_hz - multiple * c.fwhm_hz, c.center_hz + multiple * c.fwhm_hz)
}
