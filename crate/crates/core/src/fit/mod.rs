//! Resonance extraction: peak detection, Lorentzian fits, FSR and finesse.

pub mod lm;
pub mod lorentzian;
pub mod peaks;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantity::Quantity;
use crate::spectral::{length_for_fsr, Channel, SpectrumTrace, DEFAULT_GROUP_INDEX};

pub use lm::{levenberg_marquardt, LmOptions, LmSolution};
pub use lorentzian::{fit_lorentzian, Background, Etalon, FitOptions, ResonanceFit};
pub use peaks::{detect_peaks, resolve_overlaps, PeakCandidate, Polarity};

/// Fitted resonances ordered by center frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub fits: Vec<ResonanceFit>,
}

impl PeakSet {
    /// Sorts by center and rejects coincident centers.
    pub fn new(mut fits: Vec<ResonanceFit>) -> Result<Self> {
        fits.sort_by(|a, b| a.center.value.total_cmp(&b.center.value));
        if fits.windows(2).any(|w| w[1].center.value <= w[0].center.value) {
            return Err(Error::domain("resonance centers must be distinct"));
        }
        Ok(Self { fits })
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    pub fn centers(&self) -> Vec<Quantity> {
        self.fits.iter().map(|f| f.center).collect()
    }

    /// Combined linewidth over all fits.
    pub fn mean_fwhm(&self) -> Result<Quantity> {
        combine(&self.fits.iter().map(|f| f.fwhm).collect::<Vec<_>>())
    }
}

/// Inverse-variance weighted mean. Falls back to the plain mean when any
/// sigma is zero.
pub fn combine(values: &[Quantity]) -> Result<Quantity> {
    if values.is_empty() {
        return Err(Error::InsufficientData("nothing to combine".into()));
    }
    let n = values.len() as f64;
    if values.iter().any(|q| q.sigma == 0.0) {
        let mean = values.iter().map(|q| q.value).sum::<f64>() / n;
        let sigma = values.iter().map(|q| q.sigma * q.sigma).sum::<f64>().sqrt() / n;
        return Quantity::new(mean, sigma);
    }
    let weights: Vec<f64> = values.iter().map(|q| 1.0 / (q.sigma * q.sigma)).collect();
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(&weights).map(|(q, w)| q.value * w).sum::<f64>() / total;
    Quantity::new(mean, total.sqrt().recip())
}

/// Mean adjacent spacing of the centers.
///
/// The mean spacing telescopes to (last − first)/(n − 1), so the center
/// sigmas enter through the two end points; the scatter of the individual
/// spacings adds its standard error when there are at least two spacings.
pub fn estimate_fsr(peaks: &PeakSet) -> Result<Quantity> {
    let n = peaks.len();
    if n < 2 {
        return Err(Error::InsufficientPeaks(n));
    }
    let c = peaks.centers();
    let spacings: Vec<f64> = c.windows(2).map(|w| w[1].value - w[0].value).collect();
    let m = spacings.len() as f64;
    let mean = spacings.iter().sum::<f64>() / m;
    let from_centers = c[0].sigma.hypot(c[n - 1].sigma) / m;
    let scatter = if spacings.len() >= 2 {
        let var = spacings.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Quantity::new(mean, from_centers.hypot(scatter))
}

/// F = FSR/FWHM with first-order propagation.
pub fn finesse(fsr: Quantity, fwhm: Quantity) -> Result<Quantity> {
    if !(fwhm.value > 0.0) {
        return Err(Error::domain(format!("FWHM must be positive, got {}", fwhm.value)));
    }
    if !(fsr.value > 0.0) {
        return Err(Error::domain(format!("FSR must be positive, got {}", fsr.value)));
    }
    let f = fsr.value / fwhm.value;
    Quantity::new(f, f * fsr.relative_sigma().hypot(fwhm.relative_sigma()))
}

/// L = c/(2 n_g FSR) in mm.
pub fn cavity_length_from_fsr(fsr: Quantity, group_index: f64) -> Result<Quantity> {
    let length = length_for_fsr(fsr.value, group_index)?;
    Quantity::new(length, length * fsr.relative_sigma())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub channel: Channel,
    pub polarity: Polarity,
    /// Minimum prominence as a fraction of the data range.
    pub prominence: f64,
    /// Fit window half-width in units of the estimated FWHM.
    pub window_multiple: f64,
    pub fit: FitOptions,
    pub group_index: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self::transmission()
    }
}

impl AnalysisOptions {
    /// Transmission peaks on a linear baseline.
    pub fn transmission() -> Self {
        Self {
            channel: Channel::Transmission,
            polarity: Polarity::Peak,
            prominence: 0.3,
            window_multiple: 5.0,
            fit: FitOptions::default(),
            group_index: DEFAULT_GROUP_INDEX,
        }
    }

    /// Reflection dips on a linear baseline plus one etalon fringe.
    pub fn reflection() -> Self {
        Self {
            channel: Channel::Reflection,
            polarity: Polarity::Dip,
            fit: FitOptions {
                background: Background::LinearEtalon,
                ..FitOptions::default()
            },
            ..Self::transmission()
        }
    }
}

/// Peaks, FSR, finesse and length from one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumAnalysis {
    pub peaks: PeakSet,
    pub fwhm: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fsr: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finesse: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_mm: Option<Quantity>,
    pub group_index: f64,
}

/// Detects, fits and summarizes every resonance in a trace. A single
/// resonance yields its linewidth only.
pub fn analyze_spectrum(trace: &SpectrumTrace, options: &AnalysisOptions) -> Result<SpectrumAnalysis> {
    let candidates = detect_peaks(trace, options.channel, options.polarity, options.prominence)?;
    let candidates = resolve_overlaps(candidates, options.window_multiple);
    if candidates.is_empty() {
        return Err(Error::InsufficientPeaks(0));
    }
    let fits = candidates
        .iter()
        .map(|c| {
            fit_lorentzian(
                trace,
                options.channel,
                peaks::window_of(c, options.window_multiple),
                options.polarity,
                &options.fit,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let peaks = PeakSet::new(fits)?;
    let fwhm = peaks.mean_fwhm()?;
    let (fsr, fin, length) = if peaks.len() >= 2 {
        let fsr = estimate_fsr(&peaks)?;
        (
            Some(fsr),
            Some(finesse(fsr, fwhm)?),
            Some(cavity_length_from_fsr(fsr, options.group_index)?),
        )
    } else {
        (None, None, None)
    };
    Ok(SpectrumAnalysis {
        peaks,
        fwhm,
        fsr,
        finesse: fin,
        length_mm: length,
        group_index: options.group_index,
    })
}
