//! Uniform grating by direct integration of the coupled-mode equations.

use num_complex::Complex64;

/// |r|² of a uniform grating from RK4 integration of
/// dR/dz = iδR + iκS, dS/dz = −iδS − iκR over `steps` slices, with no
/// backward wave entering at z = L.
pub fn rk4_grating_reflectance(kappa: f64, length_m: f64, detuning: f64, steps: usize) -> f64 {
    let i = Complex64::i();
    let deriv = |y: [Complex64; 2]| [i * detuning * y[0] + i * kappa * y[1], -i * detuning * y[1] - i * kappa * y[0]];
    let dz = length_m / steps as f64;
    // Propagate the two basis states to build the transfer matrix.
    let mut cols = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];
    for col in cols.iter_mut() {
        let mut y = *col;
        for _ in 0..steps {
            let k1 = deriv(y);
            let k2 = deriv([y[0] + k1[0] * (dz / 2.0), y[1] + k1[1] * (dz / 2.0)]);
            let k3 = deriv([y[0] + k2[0] * (dz / 2.0), y[1] + k2[1] * (dz / 2.0)]);
            let k4 = deriv([y[0] + k3[0] * dz, y[1] + k3[1] * dz]);
            for c in 0..2 {
                y[c] += (k1[c] + k2[c] * 2.0 + k3[c] * 2.0 + k4[c]) * (dz / 6.0);
            }
        }
        *col = y;
    }
    // [R(L), S(L)] = M [R(0), S(0)] with R(0) = 1 and S(L) = 0.
    let (m10, m11) = (cols[0][1], cols[1][1]);
    let s0 = -m10 / m11;
    s0.norm_sqr()
}

/// κ with tanh²(κL) = `reflectivity`, by bisection.
pub fn bisect_coupling(reflectivity: f64, length_m: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while (hi * length_m).tanh().powi(2) < reflectivity {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (mid * length_m).tanh().powi(2) < reflectivity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
