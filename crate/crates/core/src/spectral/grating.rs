//! Uniform fiber Bragg grating treated as a lumped, lossless, symmetric mirror.
//!
//! With coupling constant κ, grating length L and propagation-constant
//! detuning δ from the Bragg condition, the coupled-mode solution is
//!
//! ```text
//! r(δ) = −κ S / (δ S + i C)        t(δ) = 1 / (C − i δ S)
//! C = cosh(γL),  S = sinh(γL)/γ,   γ² = κ² − δ²
//! ```
//!
//! For |δ| > κ, γ is imaginary and C, S become cos/sin. C and S stay real in
//! both cases, and C² − γ²S² = 1 makes |r|² + |t|² = 1 exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Parameters of one grating mirror.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GratingSpec {
    pub center_wavelength_nm: f64,
    pub grating_length_mm: f64,
    pub peak_reflectivity: f64,
    /// κ in 1/m. Derived from `peak_reflectivity` and the length when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_per_m: Option<f64>,
    pub effective_index: f64,
}

/// Complex reflection and transmission amplitudes at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorResponse {
    /// Propagation-constant mismatch from the Bragg condition, rad/m.
    pub detuning_per_m: f64,
    pub reflection: Complex64,
    pub transmission: Complex64,
}

impl MirrorResponse {
    pub fn reflectance(&self) -> f64 {
        self.reflection.norm_sqr()
    }

    pub fn transmittance(&self) -> f64 {
        self.transmission.norm_sqr()
    }
}

/// κ such that `tanh²(κL) = peak_reflectivity`.
pub fn grating_coupling_from_peak(peak_reflectivity: f64, grating_length_mm: f64) -> Result<f64> {
    if !(peak_reflectivity > 0.0 && peak_reflectivity < 1.0) {
        return Err(Error::domain(format!(
            "peak reflectivity must lie in (0, 1), got {peak_reflectivity}"
        )));
    }
    if !(grating_length_mm > 0.0 && grating_length_mm.is_finite()) {
        return Err(Error::domain(format!(
            "grating length must be positive, got {grating_length_mm} mm"
        )));
    }
    // atanh(√R) = ½ ln((1+√R)² / (1−R)); avoids cancellation in 1 − √R near R = 1.
    let root = peak_reflectivity.sqrt();
    let kappa_l = 0.5 * ((1.0 + root).powi(2) / (1.0 - peak_reflectivity)).ln();
    Ok(kappa_l / (grating_length_mm * 1e-3))
}

impl GratingSpec {
    /// Grating defined by its peak reflectivity and physical length.
    pub fn new(
        center_wavelength_nm: f64,
        grating_length_mm: f64,
        peak_reflectivity: f64,
        effective_index: f64,
    ) -> Result<Self> {
        let spec = Self {
            center_wavelength_nm,
            grating_length_mm,
            peak_reflectivity,
            coupling_per_m: None,
            effective_index,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grating defined by its peak reflectivity and the width of the
    /// evanescent band; the length follows from `tanh²(κL) = R`.
    pub fn from_stopband(
        center_wavelength_nm: f64,
        stopband_nm: f64,
        peak_reflectivity: f64,
        effective_index: f64,
    ) -> Result<Self> {
        if !(stopband_nm > 0.0 && stopband_nm.is_finite()) {
            return Err(Error::domain(format!("stopband must be positive, got {stopband_nm} nm")));
        }
        if !(center_wavelength_nm > 0.0) {
            return Err(Error::domain("center wavelength must be positive"));
        }
        let lambda = center_wavelength_nm * 1e-9;
        let kappa = std::f64::consts::PI * effective_index * stopband_nm * 1e-9 / (lambda * lambda);
        // κL for unit length, then scale.
        let kappa_l_per_mm = grating_coupling_from_peak(peak_reflectivity, 1.0)? * 1e-3;
        let spec = Self {
            center_wavelength_nm,
            grating_length_mm: kappa_l_per_mm / kappa * 1e3,
            peak_reflectivity,
            coupling_per_m: Some(kappa),
            effective_index,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_reflectivity > 0.0 && self.peak_reflectivity < 1.0) {
            return Err(Error::domain(format!(
                "peak reflectivity must lie in (0, 1), got {}",
                self.peak_reflectivity
            )));
        }
        if !(self.grating_length_mm > 0.0 && self.grating_length_mm.is_finite()) {
            return Err(Error::domain("grating length must be positive"));
        }
        if !(self.effective_index > 1.0 && self.effective_index.is_finite()) {
            return Err(Error::domain(format!(
                "effective index must exceed 1, got {}",
                self.effective_index
            )));
        }
        if !(self.center_wavelength_nm > 0.0 && self.center_wavelength_nm.is_finite()) {
            return Err(Error::domain("center wavelength must be positive"));
        }
        if let Some(kappa) = self.coupling_per_m {
            let r = (kappa * self.grating_length_mm * 1e-3).tanh().powi(2);
            if ((r - self.peak_reflectivity) / self.peak_reflectivity).abs() > 1e-9 {
                return Err(Error::domain(format!(
                    "coupling {kappa} /m gives peak reflectivity {r}, expected {}",
                    self.peak_reflectivity
                )));
            }
        }
        Ok(())
    }

    /// κ in 1/m.
    pub fn coupling(&self) -> f64 {
        self.coupling_per_m.unwrap_or_else(|| {
            grating_coupling_from_peak(self.peak_reflectivity, self.grating_length_mm)
                .expect("validated grating")
        })
    }

    /// Response at a single detuning δ (rad/m).
    pub fn response_at(&self, detuning_per_m: f64) -> MirrorResponse {
        uniform_grating_response(self.coupling(), self.grating_length_mm * 1e-3, detuning_per_m)
    }

    /// δ for an optical frequency offset from the Bragg frequency.
    pub fn detuning_from_frequency(&self, offset_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.effective_index * offset_hz / SPEED_OF_LIGHT
    }

    /// δ for a vacuum-wavelength offset from the Bragg wavelength.
    pub fn detuning_from_wavelength(&self, offset_nm: f64) -> f64 {
        let lambda = self.center_wavelength_nm * 1e-9;
        -2.0 * std::f64::consts::PI * self.effective_index * offset_nm * 1e-9 / (lambda * lambda)
    }

    pub fn bragg_frequency_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (self.center_wavelength_nm * 1e-9)
    }
}

/// Closed-form response of a uniform grating (κ in 1/m, length in m).
pub fn uniform_grating_response(kappa: f64, length_m: f64, detuning: f64) -> MirrorResponse {
    let gamma_sq = kappa * kappa - detuning * detuning;
    let (c, s) = if gamma_sq >= 0.0 {
        let x = gamma_sq.sqrt() * length_m;
        (x.cosh(), length_m * sinhc(x))
    } else {
        let x = (-gamma_sq).sqrt() * length_m;
        (x.cos(), length_m * sinc(x))
    };
    let i = Complex64::i();
    let reflection = Complex64::new(-kappa * s, 0.0) / (detuning * s + i * c);
    let transmission = Complex64::new(1.0, 0.0) / (c - i * detuning * s);
    MirrorResponse {
        detuning_per_m: detuning,
        reflection,
        transmission,
    }
}

fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Responses on a detuning grid (rad/m).
pub fn grating_response(spec: &GratingSpec, detunings_per_m: &[f64]) -> Vec<MirrorResponse> {
    let kappa = spec.coupling();
    let length = spec.grating_length_mm * 1e-3;
    detunings_per_m
        .iter()
        .map(|&d| uniform_grating_response(kappa, length, d))
        .collect()
}

/// Width in nm of the evanescent band |δ| < κ.
pub fn grating_stopband(spec: &GratingSpec) -> f64 {
    let lambda = spec.center_wavelength_nm * 1e-9;
    spec.coupling() * lambda * lambda / (std::f64::consts::PI * spec.effective_index) * 1e9
}
