//! Single-resonance Lorentzian fit with a polynomial and optional etalon
//! background.
//!
//! In scaled coordinates x̃ = (x − x_ref)/w₀, with w₀ the initial width:
//!
//! ```text
//! f(x̃) = b₀ + b₁x̃ + e_s sin(2πx̃/P) + e_c cos(2πx̃/P) ± A / (1 + 4(x̃ − x₀)²/w²)
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions};
use super::peaks::Polarity;
use crate::error::{Error, Result};
use crate::quantity::Quantity;
use crate::spectral::{Channel, SpectrumTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Constant,
    Linear,
    LinearEtalon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub background: Background,
    pub lm: LmOptions,
    /// Seed for a ±10% perturbation of the initial width; off when `None`.
    pub jitter_seed: Option<u64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            background: Background::Linear,
            lm: LmOptions::default(),
            jitter_seed: None,
        }
    }
}

/// Sinusoidal background fringe, `amplitude·sin(2π(x − reference)/period + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Etalon {
    pub amplitude: f64,
    pub period_hz: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    pub center: Quantity,
    pub fwhm: Quantity,
    /// Height of a peak or depth of a dip above/below the background.
    pub amplitude: Quantity,
    pub polarity: Polarity,
    pub background: Background,
    /// Background value at `reference_hz` and its slope per Hz.
    pub baseline: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etalon: Option<Etalon>,
    pub reference_hz: f64,
    pub chi2_reduced: f64,
    pub window_hz: [f64; 2],
    pub iterations: usize,
}

impl ResonanceFit {
    /// Fitted model at a frequency.
    pub fn evaluate(&self, freq_hz: f64) -> f64 {
        let dx = freq_hz - self.reference_hz;
        let u = 2.0 * (freq_hz - self.center.value) / self.fwhm.value;
        let sign = match self.polarity {
            Polarity::Peak => 1.0,
            Polarity::Dip => -1.0,
        };
        let fringe = self
            .etalon
            .map_or(0.0, |e| e.amplitude * (2.0 * PI * dx / e.period_hz + e.phase).sin());
        self.baseline[0] + self.baseline[1] * dx + fringe + sign * self.amplitude.value / (1.0 + u * u)
    }
}

/// Parameter slots in the scaled problem.
#[derive(Clone, Copy)]
struct Layout {
    slope: Option<usize>,
    etalon: Option<usize>,
    len: usize,
}

const X0: usize = 0;
const W: usize = 1;
const AMP: usize = 2;
const B0: usize = 3;

impl Layout {
    fn new(background: Background) -> Self {
        match background {
            Background::Constant => Layout { slope: None, etalon: None, len: 4 },
            Background::Linear => Layout { slope: Some(4), etalon: None, len: 5 },
            Background::LinearEtalon => Layout { slope: Some(4), etalon: Some(5), len: 8 },
        }
    }
}

fn residuals(x: &[f64], y: &[f64], p: &[f64], sign: f64, layout: Layout) -> (DVector<f64>, DMatrix<f64>) {
    let m = x.len();
    let mut r = DVector::zeros(m);
    let mut j = DMatrix::zeros(m, layout.len);
    for i in 0..m {
        let xi = x[i];
        let u = 2.0 * (xi - p[X0]) / p[W];
        let l = 1.0 / (1.0 + u * u);
        let l2 = l * l;
        let mut f = p[B0] + sign * p[AMP] * l;
        j[(i, X0)] = sign * p[AMP] * 4.0 * u * l2 / p[W];
        j[(i, W)] = sign * p[AMP] * 2.0 * u * u * l2 / p[W];
        j[(i, AMP)] = sign * l;
        j[(i, B0)] = 1.0;
        if let Some(k) = layout.slope {
            f += p[k] * xi;
            j[(i, k)] = xi;
        }
        if let Some(k) = layout.etalon {
            let (es, ec, period) = (p[k], p[k + 1], p[k + 2]);
            let theta = 2.0 * PI * xi / period;
            let (s, c) = theta.sin_cos();
            f += es * s + ec * c;
            j[(i, k)] = s;
            j[(i, k + 1)] = c;
            j[(i, k + 2)] = (es * c - ec * s) * (-theta / period);
        }
        r[i] = f - y[i];
    }
    (r, j)
}

/// Least-squares coefficients of `columns` against `y`, with the residual sum of squares.
fn linear_lsq(columns: &[Vec<f64>], y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = y.len();
    let k = columns.len();
    if m < k {
        return None;
    }
    let a = DMatrix::from_fn(m, k, |i, c| columns[c][i]);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).ok()?;
    let rss = (&a * &coef - &b).norm_squared();
    Some((coef.as_slice().to_vec(), rss))
}

/// Fits one resonance inside `window_hz` of the chosen channel.
pub fn fit_lorentzian(
    trace: &SpectrumTrace,
    channel: Channel,
    window_hz: (f64, f64),
    polarity: Polarity,
    options: &FitOptions,
) -> Result<ResonanceFit> {
    let (lo, hi) = window_hz;
    if !(lo < hi) {
        return Err(Error::domain(format!("fit window [{lo}, {hi}] is empty")));
    }
    let data = trace
        .channel(channel)
        .ok_or_else(|| Error::domain("trace has no reflection channel"))?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = trace
        .freq_hz
        .iter()
        .zip(data)
        .filter(|(f, _)| **f >= lo && **f <= hi)
        .map(|(f, v)| (*f, *v))
        .unzip();
    if xs.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "fit window [{lo:.6e}, {hi:.6e}] Hz holds {} samples; at least 10 are needed",
            xs.len()
        )));
    }
    let sign = match polarity {
        Polarity::Peak => 1.0,
        Polarity::Dip => -1.0,
    };

    // Initial center and width from the extremum and its half-prominence crossings.
    let oriented: Vec<f64> = ys.iter().map(|v| sign * v).collect();
    let top = (0..oriented.len())
        .max_by(|&a, &b| oriented[a].total_cmp(&oriented[b]))
        .expect("non-empty window");
    let left_min = oriented[..=top].iter().cloned().fold(f64::INFINITY, f64::min);
    let right_min = oriented[top..].iter().cloned().fold(f64::INFINITY, f64::min);
    let prominence = oriented[top] - left_min.max(right_min);
    if !(prominence > 0.0) {
        return Err(Error::InsufficientData("fit window contains no resonance".into()));
    }
    let mut width0 = super::peaks::half_prominence_width(&xs, &oriented, top, prominence);
    if let Some(seed) = options.jitter_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        width0 *= 1.0 + rng.random_range(-0.1..=0.1);
    }
    if !(width0 > 0.0) {
        return Err(Error::InsufficientData("could not estimate an initial width".into()));
    }

    let reference = 0.5 * (lo + hi);
    let x: Vec<f64> = xs.iter().map(|f| (f - reference) / width0).collect();
    let x0 = x[top];
    let layout = Layout::new(options.background);

    // Background from the wings, away from the resonance.
    let far: Vec<usize> = (0..x.len()).filter(|&i| (x[i] - x0).abs() > 2.0).collect();
    let wing = if far.len() >= 6 { far } else { (0..x.len()).collect() };
    let wx: Vec<f64> = wing.iter().map(|&i| x[i]).collect();
    let wy: Vec<f64> = wing.iter().map(|&i| ys[i]).collect();
    let ones = vec![1.0; wx.len()];
    let mut p = vec![0.0; layout.len];
    p[X0] = x0;
    p[W] = 1.0;
    match options.background {
        Background::Constant => {
            p[B0] = wy.iter().sum::<f64>() / wy.len() as f64;
        }
        Background::Linear => {
            let (c, _) = linear_lsq(&[ones, wx.clone()], &wy)
                .ok_or_else(|| Error::InsufficientData("too few wing samples for a baseline".into()))?;
            p[B0] = c[0];
            p[4] = c[1];
        }
        Background::LinearEtalon => {
            let span = x[x.len() - 1] - x[0];
            let mut best: Option<(f64, Vec<f64>, f64)> = None;
            let steps = 80;
            for s in 0..=steps {
                let period = 2.0 * (2.0 * span.max(2.0) / 2.0).powf(s as f64 / steps as f64);
                let sin: Vec<f64> = wx.iter().map(|v| (2.0 * PI * v / period).sin()).collect();
                let cos: Vec<f64> = wx.iter().map(|v| (2.0 * PI * v / period).cos()).collect();
                if let Some((c, rss)) = linear_lsq(&[ones.clone(), wx.clone(), sin, cos], &wy) {
                    if best.as_ref().is_none_or(|b| rss < b.2) {
                        best = Some((period, c, rss));
                    }
                }
            }
            let (period, c, _) =
                best.ok_or_else(|| Error::InsufficientData("too few wing samples for a baseline".into()))?;
            p[B0] = c[0];
            p[4] = c[1];
            p[5] = c[2];
            p[6] = c[3];
            p[7] = period;
        }
    }
    let base_at_top = {
        let mut b = p[B0];
        if let Some(k) = layout.slope {
            b += p[k] * x0;
        }
        if let Some(k) = layout.etalon {
            let theta = 2.0 * PI * x0 / p[k + 2];
            b += p[k] * theta.sin() + p[k + 1] * theta.cos();
        }
        b
    };
    p[AMP] = sign * (ys[top] - base_at_top);
    if !(p[AMP] > 0.0) {
        p[AMP] = prominence;
    }

    let solution = levenberg_marquardt(
        |q| residuals(&x, &ys, q, sign, layout),
        |q| q[W] > 0.0 && layout.etalon.is_none_or(|k| q[k + 2] > 0.0),
        &p,
        &options.lm,
    )?;
    let q = &solution.params;
    let cov = solution.covariance();
    let sd = |k: usize| cov[(k, k)].max(0.0).sqrt();

    let center = reference + q[X0] * width0;
    let fwhm = q[W] * width0;
    if center < lo || center > hi {
        return Err(Error::WindowTooNarrow(format!(
            "fitted center {center:.6e} Hz left the window [{lo:.6e}, {hi:.6e}] Hz"
        )));
    }
    if fwhm >= hi - lo {
        return Err(Error::WindowTooNarrow(format!(
            "fitted FWHM {fwhm:.4e} Hz reaches the window width {:.4e} Hz",
            hi - lo
        )));
    }
    let inside = xs.iter().filter(|f| (**f - center).abs() <= 0.5 * fwhm).count();
    if inside < 3 {
        return Err(Error::InsufficientData(format!(
            "only {inside} samples fall within the fitted FWHM; at least 3 are needed"
        )));
    }

    let slope = layout.slope.map_or(0.0, |k| q[k] / width0);
    let etalon = layout.etalon.map(|k| Etalon {
        amplitude: q[k].hypot(q[k + 1]),
        period_hz: q[k + 2] * width0,
        phase: q[k + 1].atan2(q[k]),
    });
    let chi2 = solution.reduced_chi_square();
    if !chi2.is_finite() {
        return Err(Error::NumericalFailure("reduced chi-square is not finite".into()));
    }
    Ok(ResonanceFit {
        center: Quantity::new(center, sd(X0) * width0)?,
        fwhm: Quantity::new(fwhm, sd(W) * width0)?,
        amplitude: Quantity::new(q[AMP], sd(AMP))?,
        polarity,
        background: options.background,
        baseline: [q[B0], slope],
        etalon,
        reference_hz: reference,
        chi2_reduced: chi2,
        window_hz: [lo, hi],
        iterations: solution.iterations,
    })
}
