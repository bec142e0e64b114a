//! Finite-difference eigensolver for the m = 1 hybrid mode of a step-index
//! cylinder, written in the transverse magnetic field.
//!
//! Unknowns on a cell-centred radial grid r_j = (j + ½)h are u = H_r and
//! v = H_φ/i. With ε piecewise constant the transverse-H wave equation
//! reduces to
//!
//! ```text
//! (1/r)(r u')' − 2u/r² + 2v/r² + k²εu                   = β²u
//! ε (G)' + u'/r + (u − v)/r² + k²εv                      = β²v
//! G = ((r v)' − u) / (ε r)
//! ```
//!
//! G is proportional to E_z and is evaluated on cell faces, where the core
//! boundary sits; ε on that face is the arithmetic mean. The outer edge is
//! a hard wall far into the evanescent tail.

use crate::band::BandMatrix;

#[derive(Debug, Clone, Copy)]
pub struct FdMode {
    pub effective_index: f64,
    /// Relative eigen-residual ‖Ax − λx‖/‖λx‖ of the returned vector.
    pub residual: f64,
    pub unknowns: usize,
}

/// Solves on a grid with `cells_in_core` cells across the core radius and
/// a wall at `a + tail_um`.
pub fn fd_effective_index(
    diameter_nm: f64,
    wavelength_nm: f64,
    n_core: f64,
    n_clad: f64,
    cells_in_core: usize,
    tail_um: f64,
) -> FdMode {
    let a = diameter_nm * 1e-3 / 2.0; // µm
    let k = 2.0 * std::f64::consts::PI / (wavelength_nm * 1e-3);
    let h = a / cells_in_core as f64;
    let cells = ((a + tail_um) / h).ceil() as usize;
    let e1 = n_core * n_core;
    let e2 = n_clad * n_clad;
    let k2 = k * k;

    let r = |j: usize| (j as f64 + 0.5) * h;
    let eps = |j: usize| if j < cells_in_core { e1 } else { e2 };
    let face_eps = |f: usize| 0.5 * (eps(f - 1) + eps(f));
    let iu = |j: usize| 2 * j;
    let iv = |j: usize| 2 * j + 1;

    let n = 2 * cells;
    let mut a_mat = BandMatrix::zeros(n, 3, 2);

    for j in 0..cells {
        let rj = r(j);
        let ej = eps(j);
        // u equation.
        let row = iu(j);
        let r_out = (j + 1) as f64 * h;
        let r_in = j as f64 * h;
        let c = 1.0 / (h * h * rj);
        if j + 1 < cells {
            a_mat.add(row, iu(j + 1), c * r_out);
        }
        a_mat.add(row, iu(j), -c * (r_out + r_in));
        if j > 0 {
            a_mat.add(row, iu(j - 1), c * r_in);
        }
        a_mat.add(row, iu(j), -2.0 / (rj * rj) + k2 * ej);
        a_mat.add(row, iv(j), 2.0 / (rj * rj));

        // v equation.
        let row = iv(j);
        // ε_j (G_{j+1} − G_j)/h with G_f built from cells f−1 and f.
        let add_face = |f: usize, sign: f64, a_mat: &mut BandMatrix| {
            if f == 0 || f >= cells {
                return;
            }
            let rf = f as f64 * h;
            let w = sign * ej / (h * face_eps(f) * rf);
            a_mat.add(row, iv(f), w * r(f) / h);
            a_mat.add(row, iv(f - 1), -w * r(f - 1) / h);
            a_mat.add(row, iu(f - 1), -w * 0.5);
            a_mat.add(row, iu(f), -w * 0.5);
        };
        add_face(j + 1, 1.0, &mut a_mat);
        add_face(j, -1.0, &mut a_mat);
        // u'/r by central differences; u_{−1} = u_0, u_N = 0.
        let d = 1.0 / (2.0 * h * rj);
        if j + 1 < cells {
            a_mat.add(row, iu(j + 1), d);
        }
        if j > 0 {
            a_mat.add(row, iu(j - 1), -d);
        } else {
            a_mat.add(row, iu(0), -d);
        }
        a_mat.add(row, iu(j), 1.0 / (rj * rj));
        a_mat.add(row, iv(j), -1.0 / (rj * rj) + k2 * ej);
    }

    // Start from a profile concentrated near the core.
    let mut x: Vec<f64> = (0..n).map(|i| (-(r(i / 2) / (2.0 * a)).powi(2)).exp()).collect();
    normalize(&mut x);

    let shifted = |sigma: f64| {
        let mut m = a_mat.clone();
        for i in 0..n {
            m.add(i, i, -sigma);
        }
        m.factor().expect("shifted operator is singular")
    };

    // Coarse phase: fixed shift above every guided eigenvalue.
    let mut sigma = k2 * e1;
    let lu = shifted(sigma);
    let mut lambda = sigma;
    for _ in 0..60 {
        let y = lu.solve(&x);
        lambda = sigma + dot(&x, &x) / dot(&x, &y);
        x = y;
        normalize(&mut x);
    }
    // Fine phase: shift to the current estimate.
    for _ in 0..40 {
        sigma = lambda * (1.0 + 1e-9);
        let lu = shifted(sigma);
        let y = lu.solve(&x);
        let next = sigma + dot(&x, &x) / dot(&x, &y);
        x = y;
        normalize(&mut x);
        let done = ((next - lambda) / lambda).abs() < 1e-15;
        lambda = next;
        if done {
            break;
        }
    }
    let ax = a_mat.mul_vec(&x);
    let res: f64 = ax.iter().zip(&x).map(|(p, q)| (p - lambda * q).powi(2)).sum::<f64>().sqrt();

    FdMode {
        effective_index: lambda.sqrt() / k,
        residual: res / lambda.abs(),
        unknowns: n,
    }
}

/// Richardson extrapolation of two O(h²) solutions at `cells_in_core` and
/// twice that.
pub fn fd_effective_index_extrapolated(
    diameter_nm: f64,
    wavelength_nm: f64,
    n_core: f64,
    n_clad: f64,
    cells_in_core: usize,
) -> f64 {
    let tail = 40.0;
    let coarse = fd_effective_index(diameter_nm, wavelength_nm, n_core, n_clad, cells_in_core, tail);
    let fine = fd_effective_index(diameter_nm, wavelength_nm, n_core, n_clad, 2 * cells_in_core, tail);
    (4.0 * fine.effective_index - coarse.effective_index) / 3.0
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn normalize(x: &mut [f64]) {
    let norm = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}
