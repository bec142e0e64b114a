//! Levenberg–Marquardt minimization of ½‖r(p)‖² with Marquardt diagonal
//! scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, FitFailure, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub cost_tolerance: f64,
    /// Stop when the step norm falls below this.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            cost_tolerance: 1e-10,
            step_tolerance: 1e-12,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmSolution {
    pub params: Vec<f64>,
    /// ½‖r‖² at the solution.
    pub cost: f64,
    pub iterations: usize,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    /// (JᵀJ)⁻¹ at the solution, unscaled.
    pub inverse_normal: DMatrix<f64>,
    pub residual_count: usize,
}

impl LmSolution {
    /// χ² per degree of freedom.
    pub fn reduced_chi_square(&self) -> f64 {
        let dof = self.residual_count.saturating_sub(self.params.len()).max(1);
        2.0 * self.cost / dof as f64
    }

    /// Parameter covariance scaled by the reduced χ².
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.inverse_normal * self.reduced_chi_square()
    }
}

const MAX_DAMPING: f64 = 1e16;

/// Minimizes the residual vector returned by `model`, which also returns the
/// Jacobian (rows: residuals, columns: parameters). Steps for which
/// `admissible` returns false are rejected like cost increases.
pub fn levenberg_marquardt<M, A>(model: M, admissible: A, initial: &[f64], options: &LmOptions) -> Result<LmSolution>
where
    M: Fn(&[f64]) -> (DVector<f64>, DMatrix<f64>),
    A: Fn(&[f64]) -> bool,
{
    let n = initial.len();
    let mut params = DVector::from_column_slice(initial);
    let (mut residual, mut jacobian) = model(params.as_slice());
    let mut cost = 0.5 * residual.norm_squared();
    if !cost.is_finite() {
        return Err(Error::NumericalFailure("initial residuals are not finite".into()));
    }
    let mut damping = options.initial_damping;
    let mut history = vec![cost];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iterations {
        iterations += 1;
        let jt = jacobian.transpose();
        let normal = &jt * &jacobian;
        let gradient = &jt * &residual;
        let diag_floor = normal.diagonal().max() * 1e-15;

        let mut accepted = false;
        loop {
            let mut lhs = normal.clone();
            for i in 0..n {
                lhs[(i, i)] += damping * normal[(i, i)].max(diag_floor).max(f64::MIN_POSITIVE);
            }
            let Some(chol) = lhs.cholesky() else {
                damping *= 10.0;
                if damping > MAX_DAMPING {
                    break;
                }
                continue;
            };
            let step = -chol.solve(&gradient);
            let step_norm = step.norm();
            if step_norm < options.step_tolerance {
                converged = true;
                break;
            }
            let trial = &params + &step;
            if admissible(trial.as_slice()) {
                let (r_new, j_new) = model(trial.as_slice());
                let cost_new = 0.5 * r_new.norm_squared();
                if cost_new.is_finite() && cost_new < cost {
                    let drop = cost - cost_new;
                    params = trial;
                    residual = r_new;
                    jacobian = j_new;
                    cost = cost_new;
                    history.push(cost);
                    damping = (damping / 10.0).max(1e-12);
                    accepted = true;
                    if drop <= options.cost_tolerance * (cost + drop) {
                        converged = true;
                    }
                    break;
                }
            }
            damping *= 10.0;
            if damping > MAX_DAMPING {
                break;
            }
        }
        if converged {
            break;
        }
        if !accepted {
            // No downhill step at any damping: the iterate is a minimum to
            // working precision.
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(Error::FitFailure(Box::new(FitFailure {
            reason: format!("no convergence within {} iterations", options.max_iterations),
            iterations,
            last_params: params.as_slice().to_vec(),
            last_cost: cost,
            damping,
        })));
    }

    let normal = jacobian.transpose() * &jacobian;
    let inverse_normal = match normal.clone().cholesky() {
        Some(chol) => chol.inverse(),
        None => normal.try_inverse().ok_or_else(|| {
            Error::FitFailure(Box::new(FitFailure {
                reason: "normal matrix is singular at the solution".into(),
                iterations,
                last_params: params.as_slice().to_vec(),
                last_cost: cost,
                damping,
            }))
        })?,
    };

    Ok(LmSolution {
        params: params.as_slice().to_vec(),
        cost,
        iterations,
        cost_history: history,
        inverse_normal,
        residual_count: residual.len(),
    })
}
