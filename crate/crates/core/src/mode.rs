//! Fundamental HE11 mode of a step-index cylinder (silica core in vacuum),
//! its effective mode area and the surface intensity.
//!
//! With U = a·k·√(n₁² − n²), W = a·k·√(n² − n₂²) and β = n·k, HE11 solves
//!
//! ```text
//! J₀(U)/(U J₁(U)) = −(n₁² + n₂²)/(2n₁²) · K₁'(W)/(W K₁(W)) + 1/U² − R
//! R² = ((n₁² − n₂²)/(2n₁²))² (K₁'/(W K₁))² + (β/(n₁k))² (1/U² + 1/W²)²
//! ```
//!
//! The solver clears the J₁ denominator so the function it brackets has no
//! poles in (n₂, n₁).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{bessel_j, bessel_k_scaled, integrate, integrate_to_infinity, refine_root};

/// Silica at 1389 nm, the configured default core index.
pub const DEFAULT_SILICA_INDEX: f64 = 1.4449;

/// Root tolerance on the effective index.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// Relative tolerance of the mode-area quadratures.
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

const SCAN_SUBDIVISIONS: usize = 200;
const SCAN_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberGeometry {
    pub diameter_nm: f64,
    pub core_index: f64,
    pub cladding_index: f64,
    pub wavelength_nm: f64,
}

impl FiberGeometry {
    pub fn new(diameter_nm: f64, core_index: f64, cladding_index: f64, wavelength_nm: f64) -> Result<Self> {
        let g = Self {
            diameter_nm,
            core_index,
            cladding_index,
            wavelength_nm,
        };
        g.validate()?;
        Ok(g)
    }

    /// Silica nanofiber in vacuum at the default index.
    pub fn nanofiber(diameter_nm: f64, wavelength_nm: f64) -> Result<Self> {
        Self::new(diameter_nm, DEFAULT_SILICA_INDEX, 1.0, wavelength_nm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter_nm > 0.0 && self.diameter_nm.is_finite()) {
            return Err(Error::domain(format!("diameter must be positive, got {} nm", self.diameter_nm)));
        }
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return Err(Error::domain(format!("wavelength must be positive, got {} nm", self.wavelength_nm)));
        }
        if !(self.cladding_index >= 1.0 && self.core_index > self.cladding_index && self.core_index.is_finite()) {
            return Err(Error::domain(format!(
                "need core index > cladding index >= 1, got {} and {}",
                self.core_index, self.cladding_index
            )));
        }
        Ok(())
    }

    fn radius_um(&self) -> f64 {
        self.diameter_nm * 5e-4
    }

    fn wavenumber_per_um(&self) -> f64 {
        2.0 * PI / (self.wavelength_nm * 1e-3)
    }
}

/// V = (π d/λ)·√(n₁² − n₂²).
pub fn v_number(geom: &FiberGeometry) -> f64 {
    PI * geom.diameter_nm / geom.wavelength_nm * (geom.core_index.powi(2) - geom.cladding_index.powi(2)).max(0.0).sqrt()
}

/// Malitson three-term Sellmeier index of fused silica; valid 0.21–3.71 µm.
pub fn silica_index_sellmeier(wavelength_nm: f64) -> f64 {
    const B: [f64; 3] = [0.696_166_3, 0.407_942_6, 0.897_479_4];
    const C: [f64; 3] = [0.068_404_3, 0.116_241_4, 9.896_161];
    let l2 = (wavelength_nm * 1e-3).powi(2);
    let sum: f64 = B.iter().zip(C).map(|(b, c)| b * l2 / (l2 - c * c)).sum();
    (1.0 + sum).sqrt()
}

/// Solved HE11 mode with the constants that define its fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct He11 {
    pub geometry: FiberGeometry,
    pub effective_index: f64,
    pub u: f64,
    pub w: f64,
    /// Hybrid-mode mixing parameter s.
    pub s: f64,
}

fn k1_log_derivative(w: f64) -> f64 {
    // K₁'(W)/(W K₁(W)) with K₁' = −K₀ − K₁/W; the exponential scaling cancels.
    (-bessel_k_scaled(0.0, w) / bessel_k_scaled(1.0, w) - 1.0 / w) / w
}

fn characteristic(geom: &FiberGeometry, n: f64) -> f64 {
    let a = geom.radius_um();
    let k = geom.wavenumber_per_um();
    let (n1s, n2s) = (geom.core_index.powi(2), geom.cladding_index.powi(2));
    let u = a * k * (n1s - n * n).sqrt();
    let w = a * k * (n * n - n2s).sqrt();
    let kw = k1_log_derivative(w);
    let inv = 1.0 / (u * u) + 1.0 / (w * w);
    let r = (((n1s - n2s) / (2.0 * n1s)).powi(2) * kw * kw + (n * n / n1s) * inv * inv).sqrt();
    let rhs = -(n1s + n2s) / (2.0 * n1s) * kw + 1.0 / (u * u) - r;
    bessel_j(0, u) - u * bessel_j(1, u) * rhs
}

/// Effective index of HE11: the largest-index sign change of the
/// characteristic function on a scan of (n₂, n₁), refined to
/// [`ROOT_TOLERANCE`].
pub fn solve_he11(geom: &FiberGeometry) -> Result<He11> {
    geom.validate()?;
    let lo = geom.cladding_index + SCAN_MARGIN;
    let hi = geom.core_index - SCAN_MARGIN;
    if !(lo < hi) {
        return Err(Error::domain("index contrast is too small to scan"));
    }
    let f = |n: f64| characteristic(geom, n);
    let mut bracket = None;
    'scan: for level in 0..4 {
        let steps = SCAN_SUBDIVISIONS << level;
        let mut right = hi;
        let mut f_right = f(right);
        for i in (0..steps).rev() {
            let left = lo + (hi - lo) * i as f64 / steps as f64;
            let f_left = f(left);
            if f_left == 0.0 {
                bracket = Some((left, left));
                break 'scan;
            }
            if f_left.signum() != f_right.signum() && f_left.is_finite() && f_right.is_finite() {
                bracket = Some((left, right));
                break 'scan;
            }
            right = left;
            f_right = f_left;
        }
    }
    let (a, b) = bracket.ok_or_else(|| {
        Error::NumericalFailure(format!(
            "no HE11 root bracketed in ({lo}, {hi}) for d = {} nm, λ = {} nm after {} subdivisions",
            geom.diameter_nm,
            geom.wavelength_nm,
            SCAN_SUBDIVISIONS << 3
        ))
    })?;
    let n = if a == b { a } else { refine_root(f, a, b, ROOT_TOLERANCE)? };
    if !(n > geom.cladding_index && n < geom.core_index) {
        return Err(Error::NumericalFailure(format!("root {n} lies outside the guided range")));
    }
    let radius = geom.radius_um();
    let k = geom.wavenumber_per_um();
    let u = radius * k * (geom.core_index.powi(2) - n * n).sqrt();
    let w = radius * k * (n * n - geom.cladding_index.powi(2)).sqrt();
    let j1 = bessel_j(1, u);
    let dj1 = bessel_j(0, u) - j1 / u;
    let s = (1.0 / (u * u) + 1.0 / (w * w)) / (dj1 / (u * j1) + k1_log_derivative(w));
    Ok(He11 {
        geometry: *geom,
        effective_index: n,
        u,
        w,
        s,
    })
}

impl He11 {
    /// Electric-field intensity |E|² of the circularly polarized mode at
    /// radius `r_um`, up to a common factor. Outside the core it is taken
    /// on the vacuum side.
    pub fn intensity(&self, r_um: f64) -> f64 {
        let g = &self.geometry;
        let a = g.radius_um();
        let k = g.wavenumber_per_um();
        let beta = self.effective_index * k;
        let s = self.s;
        if r_um < a {
            let h = self.u / a;
            let x = h * r_um;
            let (j0, j1, j2) = (bessel_j(0, x), bessel_j(1, x), bessel_j(2, x));
            (beta / h).powi(2) / 2.0 * ((1.0 - s).powi(2) * j0 * j0 + (1.0 + s).powi(2) * j2 * j2) + j1 * j1
        } else {
            let q = self.w / a;
            let x = q * r_um;
            // K_n(qr)/K₁(W) through the scaled functions.
            let decay = (-(x - self.w)).exp() / bessel_k_scaled(1.0, self.w);
            let (k0, k1, k2) = (
                bessel_k_scaled(0.0, x) * decay,
                bessel_k_scaled(1.0, x) * decay,
                bessel_k_scaled(2.0, x) * decay,
            );
            let amp = bessel_j(1, self.u).powi(2);
            amp * ((beta / q).powi(2) / 2.0 * ((1.0 - s).powi(2) * k0 * k0 + (1.0 + s).powi(2) * k2 * k2) + k1 * k1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeArea {
    pub area_um2: f64,
    /// Intensity just outside the surface over the peak intensity.
    pub surface_intensity_ratio: f64,
}

/// A_eff = (∫I dA)² / ∫I² dA over the whole cross-section.
pub fn effective_mode_area(mode: &He11) -> Result<ModeArea> {
    let a = mode.geometry.radius_um();
    let q = mode.w / a;
    let tol = QUADRATURE_TOLERANCE;
    let first = integrate(|r| mode.intensity(r) * r, 0.0, a, tol)?.value
        + integrate_to_infinity(|r| mode.intensity(r) * r, a, 1.0 / q, tol)?.value;
    let second = integrate(|r| mode.intensity(r).powi(2) * r, 0.0, a, tol)?.value
        + integrate_to_infinity(|r| mode.intensity(r).powi(2) * r, a, 0.5 / q, tol)?.value;
    let area = 2.0 * PI * first * first / second;
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::NumericalFailure(format!("mode area evaluated to {area}")));
    }

    // Outside the core the intensity falls monotonically, so the peak is in
    // the core or at the surface.
    let surface = mode.intensity(a);
    let samples = 400;
    let mut peak = surface;
    let mut best = 0usize;
    let inside = |i: usize| mode.intensity(a * i as f64 / samples as f64 * (1.0 - 1e-12));
    for i in 0..=samples {
        let v = inside(i);
        if v > peak {
            peak = v;
            best = i;
        }
    }
    if peak > surface {
        // Golden-section polish around the best sample.
        let (mut lo, mut hi) = (
            a * best.saturating_sub(1) as f64 / samples as f64,
            a * (best + 1).min(samples) as f64 / samples as f64 * (1.0 - 1e-12),
        );
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let m1 = hi - ratio * (hi - lo);
            let m2 = lo + ratio * (hi - lo);
            if mode.intensity(m1) < mode.intensity(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        peak = peak.max(mode.intensity(0.5 * (lo + hi)));
    }
    Ok(ModeArea {
        area_um2: area,
        surface_intensity_ratio: surface / peak,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverTolerances {
    pub root: f64,
    pub quadrature_relative: f64,
}

/// Mode report: index, V, area and surface intensity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidedMode {
    pub v_number: f64,
    pub n_eff: f64,
    pub a_eff_um2: f64,
    pub surface_intensity_ratio: f64,
    pub solver_tolerances: SolverTolerances,
}

pub fn guided_mode(geom: &FiberGeometry) -> Result<GuidedMode> {
    let mode = solve_he11(geom)?;
    let area = effective_mode_area(&mode)?;
    Ok(GuidedMode {
        v_number: v_number(geom),
        n_eff: mode.effective_index,
        a_eff_um2: area.area_um2,
        surface_intensity_ratio: area.surface_intensity_ratio,
        solver_tolerances: SolverTolerances {
            root: ROOT_TOLERANCE,
            quadrature_relative: QUADRATURE_TOLERANCE,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_number_of_nanofiber() {
        let g = FiberGeometry::nanofiber(650.0, 1389.0).unwrap();
        let v = v_number(&g);
        assert!((v - 1.5333).abs() < 1e-3, "V = {v}");
        let doubled = FiberGeometry::nanofiber(1300.0, 1389.0).unwrap();
        assert!((v_number(&doubled) / v - 2.0).abs() < 1e-12);
        let flat = FiberGeometry {
            cladding_index: 1.4449,
            ..g
        };
        assert_eq!(v_number(&flat), 0.0);
    }

    #[test]
    fn geometry_validation() {
        assert!(FiberGeometry::new(0.0, 1.45, 1.0, 1389.0).is_err());
        assert!(FiberGeometry::new(650.0, 1.0, 1.0, 1389.0).is_err());
        assert!(FiberGeometry::new(650.0, 1.45, 0.9, 1389.0).is_err());
    }

    #[test]
    fn reference_indices() {
        // Values from an independent root finder on the same equation.
        for (d, want) in [(400.0, 1.001_693_0), (650.0, 1.064_782_8), (1000.0, 1.210_316_7)] {
            let m = solve_he11(&FiberGeometry::nanofiber(d, 1389.0).unwrap()).unwrap();
            assert!((m.effective_index - want).abs() < 2e-7, "d = {d}: {}", m.effective_index);
        }
    }

    #[test]
    fn bulk_limit() {
        let m = solve_he11(&FiberGeometry::nanofiber(20_000.0, 1389.0).unwrap()).unwrap();
        assert!((m.effective_index - 1.4449).abs() < 1e-3);
    }

    #[test]
    fn mode_area_reference_and_scaling() {
        let g = FiberGeometry::nanofiber(650.0, 1389.0).unwrap();
        let a = effective_mode_area(&solve_he11(&g).unwrap()).unwrap();
        assert!((a.area_um2 - 1.77951).abs() < 1e-4, "{}", a.area_um2);
        assert!(a.surface_intensity_ratio > 0.0 && a.surface_intensity_ratio <= 1.0);
        let scaled = FiberGeometry::nanofiber(1300.0, 2778.0).unwrap();
        let b = effective_mode_area(&solve_he11(&scaled).unwrap()).unwrap();
        assert!((b.area_um2 / a.area_um2 - 4.0).abs() < 1e-6);
    }

    #[test]
    fn sellmeier_value() {
        assert!((silica_index_sellmeier(1389.0) - 1.44591).abs() < 1e-5);
        assert!((silica_index_sellmeier(587.6) - 1.4585).abs() < 1e-4);
    }
}
