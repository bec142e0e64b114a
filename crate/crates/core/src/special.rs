//! Special functions and one-dimensional quadrature used by the mode solver.
//!
//! Bessel functions come from their integral representations:
//!
//! ```text
//! J_n(x)       = (1/π) ∫₀^π cos(nτ − x sin τ) dτ
//! e^x K_ν(x)   = ∫₀^∞ exp(−x (cosh t − 1)) cosh(νt) dt
//! ```
//!
//! Both integrands are analytic in a strip around the real axis, so the
//! trapezoid rule converges geometrically; the step sizes below give
//! agreement with reference tables at the 1e-14 level for 1e-4 ≤ x ≤ 1e3.

use crate::error::{Error, Result};

/// Bessel function of the first kind, integer order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    // The integrand is 2π-periodic and even, so the midpoint rule on [0, π] is
    // spectrally accurate once the sample count exceeds |x| by a margin.
    let samples = (x.abs().ceil() as usize + 40).max(48);
    let h = std::f64::consts::PI / samples as f64;
    let nf = n as f64;
    let sum: f64 = (0..samples)
        .map(|i| {
            let tau = (i as f64 + 0.5) * h;
            (nf * tau - x * tau.sin()).cos()
        })
        .sum();
    sum / samples as f64
}

/// Exponentially scaled modified Bessel function of the second kind,
/// `e^x K_ν(x)`, for `x > 0`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k_scaled requires x > 0, got {x}");
    let h = 0.1 / (x.sqrt() / 2.0).max(1.0);
    // Stop where exp(-x (cosh t - 1)) < e^-40 relative to the t = 0 term.
    let t_max = (1.0 + 40.0 / x).acosh() + 0.5;
    let steps = (t_max / h).ceil() as usize;
    let mut sum = 0.5; // t = 0 endpoint, weight 1/2
    for i in 1..=steps {
        let t = i as f64 * h;
        sum += (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    }
    sum * h
}

/// Modified Bessel function of the second kind, `K_ν(x)`.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_scaled(nu, x) * (-x).exp()
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (positive half).
const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Weights of the embedded 7-point Gauss rule at GK_NODES[1], [3], [5], [7].
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * K15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += K15_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]` until the
/// summed error estimate drops below `rel_tol * |integral|`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Integral> {
    const MAX_INTERVALS: usize = 4000;
    let (v, e) = gauss_kronrod_15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if !total.is_finite() || !error.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "integrand produced a non-finite value on [{a}, {b}]"
            )));
        }
        if error <= rel_tol * total.abs() || error < f64::MIN_POSITIVE {
            return Ok(Integral {
                value: total,
                error_estimate: error,
                intervals: pieces.len(),
            });
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::NumericalFailure(format!(
                "quadrature did not reach relative tolerance {rel_tol:e} \
                 (estimate {error:e} on {total:e}) after {MAX_INTERVALS} intervals"
            )));
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gauss_kronrod_15(&f, lo, mid);
        let (v2, e2) = gauss_kronrod_15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Integral of `f` over `[a, ∞)` via `r = a + scale·t/(1−t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    scale: f64,
    rel_tol: f64,
) -> Result<Integral> {
    integrate(
        |t| {
            let one_minus = 1.0 - t;
            let r = a + scale * t / one_minus;
            let v = f(r) * scale / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rel_tol,
    )
}

/// Refines a sign change of `f` on `[lo, hi]` with bisection safeguarded
/// secant steps (Illinois variant) until the bracket is narrower than `tol`.
pub fn refine_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NumericalFailure(format!(
            "no sign change on [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})"
        )));
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (hi - lo).abs() < tol {
            break;
        }
        let mut x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if !(x > lo.min(hi) && x < lo.max(hi)) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == f_hi.signum() {
            hi = x;
            f_hi = fx;
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        } else {
            lo = x;
            f_lo = fx;
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        }
    }
    Ok(0.5 * (lo + hi))
}
