//! Two-mirror lossy Fabry–Pérot cavity built from grating mirrors.
//!
//! With mirror amplitude reflectivities r₁, r₂, round-trip power survival
//! a = 1 − α_int and round-trip phase φ = 2πν/FSR:
//!
//! ```text
//! T(ν)  = T₁ T₂ √a / |1 − r₁ r₂ √a e^{iφ}|²
//! R₁(ν) = |r₂ √a e^{iφ} − r₁|² / |1 − r₁ r₂ √a e^{iφ}|²
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grating::GratingSpec;
use super::trace::SpectrumTrace;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Group index of fused silica near 1389 nm.
pub const DEFAULT_GROUP_INDEX: f64 = 1.462;

/// Minimum samples per linewidth before a synthesized trace is flagged.
pub const MIN_SAMPLES_PER_FWHM: f64 = 5.0;

const DEFAULT_BRAGG_NM: f64 = 1389.0;
const DEFAULT_GRATING_MM: f64 = 8.0;
const DEFAULT_GRATING_INDEX: f64 = 1.447;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavityModel {
    pub mirror_1: GratingSpec,
    pub mirror_2: GratingSpec,
    pub length_mm: f64,
    pub group_index: f64,
    /// α_int, fractional power lost per round trip outside the mirrors.
    pub intrinsic_loss: f64,
    /// Grating detuning (rad/m) at which the lumped mirror values are taken.
    #[serde(default)]
    pub mirror_detuning_per_m: f64,
}

/// Closed-form on-resonance values in the small-loss limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnResonance {
    pub transmission: f64,
    pub reflection_side_1: f64,
    pub reflection_side_2: f64,
}

impl CavityModel {
    pub fn new(
        mirror_1: GratingSpec,
        mirror_2: GratingSpec,
        length_mm: f64,
        group_index: f64,
        intrinsic_loss: f64,
    ) -> Result<Self> {
        let model = Self {
            mirror_1,
            mirror_2,
            length_mm,
            group_index,
            intrinsic_loss,
            mirror_detuning_per_m: 0.0,
        };
        model.validate()?;
        Ok(model)
    }

    /// Cavity whose mirrors transmit `t1` and `t2` at the Bragg wavelength,
    /// using 8 mm gratings at 1389 nm.
    pub fn from_losses(t1: f64, t2: f64, intrinsic_loss: f64, length_mm: f64, group_index: f64) -> Result<Self> {
        let mirror = |t: f64| GratingSpec::new(DEFAULT_BRAGG_NM, DEFAULT_GRATING_MM, 1.0 - t, DEFAULT_GRATING_INDEX);
        Self::new(mirror(t1)?, mirror(t2)?, length_mm, group_index, intrinsic_loss)
    }

    /// Same cavity with the length chosen to give the requested FSR.
    pub fn with_fsr(mut self, fsr_hz: f64) -> Result<Self> {
        self.length_mm = length_for_fsr(fsr_hz, self.group_index)?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.mirror_1.validate()?;
        self.mirror_2.validate()?;
        if !(self.length_mm > 0.0 && self.length_mm.is_finite()) {
            return Err(Error::domain(format!("cavity length must be positive, got {} mm", self.length_mm)));
        }
        if !(self.group_index >= 1.0 && self.group_index.is_finite()) {
            return Err(Error::domain(format!("group index must be at least 1, got {}", self.group_index)));
        }
        if !(self.intrinsic_loss >= 0.0 && self.intrinsic_loss < 1.0) {
            return Err(Error::domain(format!(
                "intrinsic loss must lie in [0, 1), got {}",
                self.intrinsic_loss
            )));
        }
        if !self.mirror_detuning_per_m.is_finite() {
            return Err(Error::domain("mirror detuning must be finite"));
        }
        Ok(())
    }

    /// Mirror power reflectances (R₁, R₂) at the working detuning.
    pub fn mirror_reflectances(&self) -> (f64, f64) {
        (
            self.mirror_1.response_at(self.mirror_detuning_per_m).reflectance(),
            self.mirror_2.response_at(self.mirror_detuning_per_m).reflectance(),
        )
    }

    /// Mirror power transmittances (T₁, T₂) at the working detuning.
    pub fn mirror_transmittances(&self) -> (f64, f64) {
        let (r1, r2) = self.mirror_reflectances();
        (1.0 - r1, 1.0 - r2)
    }

    /// α_tot = T₁ + T₂ + α_int.
    pub fn total_loss(&self) -> f64 {
        let (t1, t2) = self.mirror_transmittances();
        t1 + t2 + self.intrinsic_loss
    }

    pub fn fsr_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.group_index * self.length_mm * 1e-3)
    }

    /// Airy finesse FSR/FWHM of the lumped model.
    pub fn finesse(&self) -> f64 {
        let (r1, r2) = self.mirror_reflectances();
        airy_finesse(r1.sqrt() * r2.sqrt() * (1.0 - self.intrinsic_loss).sqrt())
    }

    pub fn fwhm_hz(&self) -> f64 {
        self.fsr_hz() / self.finesse()
    }

    /// The same cavity seen from the other side.
    pub fn swapped(&self) -> Self {
        Self {
            mirror_1: self.mirror_2.clone(),
            mirror_2: self.mirror_1.clone(),
            ..self.clone()
        }
    }
}

/// FSR/FWHM for a round-trip amplitude factor ρ = r₁ r₂ √a.
pub fn airy_finesse(rho: f64) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let x = (1.0 - rho) / (2.0 * rho.sqrt());
    if x >= 1.0 {
        // Contrast too low for a half-maximum crossing.
        return 0.0;
    }
    std::f64::consts::PI / (2.0 * x.asin())
}

/// Cavity length (mm) for a given FSR.
pub fn length_for_fsr(fsr_hz: f64, group_index: f64) -> Result<f64> {
    if !(fsr_hz > 0.0 && fsr_hz.is_finite()) {
        return Err(Error::domain(format!("FSR must be positive, got {fsr_hz} Hz")));
    }
    if !(group_index >= 1.0) {
        return Err(Error::domain(format!("group index must be at least 1, got {group_index}")));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * group_index * fsr_hz) * 1e3)
}

/// Power transmission and both side reflections of a lumped cavity with
/// mirror power reflectances `r1`, `r2` in [0, 1], survival `a` and
/// round-trip phase `phi`.
pub fn airy_response(r1: f64, r2: f64, survival: f64, phi: f64) -> (f64, f64, f64) {
    let (a1, a2) = (r1.sqrt(), r2.sqrt());
    let g = survival.sqrt();
    let rho = a1 * a2 * g;
    // |1 − ρe^{iφ}|² written to stay accurate near resonance.
    let s = (0.5 * phi).sin();
    let denom = (1.0 - rho).powi(2) + 4.0 * rho * s * s;
    let transmission = (1.0 - r1) * (1.0 - r2) * g / denom;
    let side = |near: f64, far: f64| {
        let num = (near - far * g).powi(2) + 4.0 * near * far * g * s * s;
        num / denom
    };
    (transmission, side(a1, a2), side(a2, a1))
}

fn round_trip_phase(offset_hz: f64, fsr_hz: f64) -> f64 {
    // Reduce the mode number first so large offsets keep full precision.
    let cycles = offset_hz / fsr_hz;
    2.0 * std::f64::consts::PI * (cycles - cycles.round())
}

/// Transmission and side-1 reflection on a grid of offsets (Hz) from a
/// cavity resonance, mirrors held at their working-point values.
pub fn cavity_spectrum(model: &CavityModel, freq_offsets_hz: &[f64]) -> Result<SpectrumTrace> {
    synthesize(model, freq_offsets_hz, false)
}

/// As [`cavity_spectrum`] with the reflection taken from side 2.
pub fn cavity_spectrum_side_2(model: &CavityModel, freq_offsets_hz: &[f64]) -> Result<SpectrumTrace> {
    synthesize(model, freq_offsets_hz, true)
}

fn synthesize(model: &CavityModel, freq_offsets_hz: &[f64], side_2: bool) -> Result<SpectrumTrace> {
    model.validate()?;
    let (r1, r2) = model.mirror_reflectances();
    let survival = 1.0 - model.intrinsic_loss;
    let fsr = model.fsr_hz();
    let mut transmission = Vec::with_capacity(freq_offsets_hz.len());
    let mut reflection = Vec::with_capacity(freq_offsets_hz.len());
    for &nu in freq_offsets_hz {
        let (t, ra, rb) = airy_response(r1, r2, survival, round_trip_phase(nu, fsr));
        transmission.push(t);
        reflection.push(if side_2 { rb } else { ra });
    }
    let mut trace = SpectrumTrace::new(freq_offsets_hz.to_vec(), transmission, Some(reflection))?;
    trace.resolution_warning = resolution_warning(&trace, model.fwhm_hz());
    Ok(trace)
}

fn resolution_warning(trace: &SpectrumTrace, fwhm_hz: f64) -> Option<String> {
    let step = trace.median_step()?;
    let per_fwhm = fwhm_hz / step;
    (per_fwhm < MIN_SAMPLES_PER_FWHM).then(|| {
        format!(
            "grid step {step:.4e} Hz gives {per_fwhm:.2} samples per FWHM ({fwhm_hz:.4e} Hz); at least {MIN_SAMPLES_PER_FWHM} are needed"
        )
    })
}

/// Small-loss closed forms: T_res = 4T₁T₂/α_tot², R_k = (1 − 2T_k/α_tot)².
pub fn on_resonance_values(model: &CavityModel) -> Result<OnResonance> {
    model.validate()?;
    let (t1, t2) = model.mirror_transmittances();
    on_resonance_closed_form(t1, t2, model.intrinsic_loss)
}

/// [`on_resonance_values`] from the three loss channels directly.
pub fn on_resonance_closed_form(t1: f64, t2: f64, intrinsic_loss: f64) -> Result<OnResonance> {
    let alpha = t1 + t2 + intrinsic_loss;
    if alpha == 0.0 {
        return Err(Error::SingularCavity(
            "total round-trip loss is zero; the resonance is infinitely sharp".into(),
        ));
    }
    if !(alpha > 0.0 && alpha.is_finite()) || t1 < 0.0 || t2 < 0.0 || intrinsic_loss < 0.0 {
        return Err(Error::domain("loss channels must be finite and non-negative"));
    }
    Ok(OnResonance {
        transmission: 4.0 * t1 * t2 / (alpha * alpha),
        reflection_side_1: (1.0 - 2.0 * t1 / alpha).powi(2),
        reflection_side_2: (1.0 - 2.0 * t2 / alpha).powi(2),
    })
}

/// On-resonance values of the full lumped model (no small-loss expansion).
pub fn exact_on_resonance(model: &CavityModel) -> Result<OnResonance> {
    model.validate()?;
    let (r1, r2) = model.mirror_reflectances();
    let (t, ra, rb) = airy_response(r1, r2, 1.0 - model.intrinsic_loss, 0.0);
    Ok(OnResonance {
        transmission: t,
        reflection_side_1: ra,
        reflection_side_2: rb,
    })
}

/// Spectrum across the grating stopband with the full complex, dispersive
/// mirror response. Offsets (Hz) are measured from the Bragg frequency of
/// `mirror_1`; resonances sit where the round-trip phase including both
/// mirror phases is a multiple of 2π.
pub fn stopband_spectrum(model: &CavityModel, freq_offsets_hz: &[f64]) -> Result<SpectrumTrace> {
    model.validate()?;
    let survival = 1.0 - model.intrinsic_loss;
    let g = Complex64::new(survival.sqrt(), 0.0);
    let single_pass = survival.powf(0.25);
    let fsr = model.fsr_hz();
    let mut transmission = Vec::with_capacity(freq_offsets_hz.len());
    let mut reflection = Vec::with_capacity(freq_offsets_hz.len());
    for &nu in freq_offsets_hz {
        let m1 = model.mirror_1.response_at(model.mirror_1.detuning_from_frequency(nu));
        let m2 = model.mirror_2.response_at(model.mirror_2.detuning_from_frequency(nu));
        let phi = round_trip_phase(nu, fsr);
        let e = Complex64::from_polar(1.0, phi);
        let half = Complex64::from_polar(1.0, 0.5 * phi);
        let loop_gain = m1.reflection * m2.reflection * g * e;
        let denom = Complex64::new(1.0, 0.0) - loop_gain;
        let t = m1.transmission * m2.transmission * single_pass * half / denom;
        let r = m1.reflection
            + m1.transmission * m1.transmission * m2.reflection * g * e / denom;
        transmission.push(t.norm_sqr());
        reflection.push(r.norm_sqr());
    }
    SpectrumTrace::new(freq_offsets_hz.to_vec(), transmission, Some(reflection))
}
