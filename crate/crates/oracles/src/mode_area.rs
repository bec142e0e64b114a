//! Effective mode area by the trapezoid rule on a dense radial grid.

use crate::bessel::{j, k0, k1, k2};

/// A_eff in µm² of the circularly polarized HE11 mode with the given
/// effective index, from the three electric-field components.
pub fn trapezoid_mode_area(diameter_nm: f64, wavelength_nm: f64, n_core: f64, n_clad: f64, n_eff: f64) -> f64 {
    let a = diameter_nm * 1e-3 / 2.0;
    let k = 2.0 * std::f64::consts::PI / (wavelength_nm * 1e-3);
    let beta = n_eff * k;
    let h = k * (n_core * n_core - n_eff * n_eff).sqrt();
    let q = k * (n_eff * n_eff - n_clad * n_clad).sqrt();
    let (u, w) = (h * a, q * a);

    let j1u = j(1, u);
    let dj1 = j(0, u) - j1u / u;
    let dk1 = -k0(w) - k1(w) / w;
    let s = (1.0 / (u * u) + 1.0 / (w * w)) / (dj1 / (u * j1u) + dk1 / (w * k1(w)));
    let ratio = j1u / k1(w);

    let intensity = |r: f64| -> f64 {
        if r < a {
            let x = h * r;
            let (b0, b1, b2) = (j(0, x), j(1, x), j(2, x));
            let er = beta / (2.0 * h) * ((1.0 - s) * b0 - (1.0 + s) * b2);
            let ephi = beta / (2.0 * h) * ((1.0 - s) * b0 + (1.0 + s) * b2);
            let ez = b1;
            er * er + ephi * ephi + ez * ez
        } else {
            let x = q * r;
            let (c0, c1, c2) = (k0(x), k1(x), k2(x));
            let er = ratio * beta / (2.0 * q) * ((1.0 - s) * c0 + (1.0 + s) * c2);
            let ephi = ratio * beta / (2.0 * q) * ((1.0 - s) * c0 - (1.0 + s) * c2);
            let ez = ratio * c1;
            er * er + ephi * ephi + ez * ez
        }
    };

    let points = 5000;
    let trap = |lo: f64, hi: f64, f: &dyn Fn(f64) -> f64| {
        let dr = (hi - lo) / (points - 1) as f64;
        let mut sum = 0.5 * (f(lo) + f(hi));
        for i in 1..points - 1 {
            sum += f(lo + i as f64 * dr);
        }
        sum * dr
    };
    // Core from the inside, cladding from just outside the boundary.
    let inner = |r: f64| intensity(r.min(a * (1.0 - 1e-15)));
    let r_max = a + 40.0 / q;
    let first = trap(0.0, a, &|r| inner(r) * r) + trap(a, r_max, &|r| intensity(r) * r);
    let second = trap(0.0, a, &|r| inner(r).powi(2) * r) + trap(a, r_max, &|r| intensity(r).powi(2) * r);
    2.0 * std::f64::consts::PI * first * first / second
}
