//! Round-trip loss budget from finesse and on-resonance reflectances.
//!
//! α_tot = 2π/F_tot, T_k = (α_tot/2)(1 ∓ √R_k) (upper sign undercoupled),
//! α_int = α_tot − T₁ − T₂ and F_int = 2π/α_int.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantity::Quantity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRegime {
    /// T_k < α_tot/2.
    #[serde(alias = "under")]
    Undercoupled,
    /// T_k > α_tot/2.
    #[serde(alias = "over")]
    Overcoupled,
}

impl CouplingRegime {
    fn sign(self) -> f64 {
        match self {
            CouplingRegime::Undercoupled => 1.0,
            CouplingRegime::Overcoupled => -1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            CouplingRegime::Undercoupled => CouplingRegime::Overcoupled,
            CouplingRegime::Overcoupled => CouplingRegime::Undercoupled,
        }
    }
}

impl std::str::FromStr for CouplingRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "under" | "undercoupled" => Ok(CouplingRegime::Undercoupled),
            "over" | "overcoupled" => Ok(CouplingRegime::Overcoupled),
            other => Err(Error::domain(format!("unknown coupling regime `{other}`; use under or over"))),
        }
    }
}

impl std::fmt::Display for CouplingRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CouplingRegime::Undercoupled => "undercoupled",
            CouplingRegime::Overcoupled => "overcoupled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub alpha_tot: Quantity,
    pub t1: Quantity,
    pub t2: Quantity,
    pub alpha_int: Quantity,
    pub finesse_tot: Quantity,
    /// `None` when α_int is zero: the intrinsic finesse is unbounded.
    pub finesse_int: Option<Quantity>,
    pub regime_1: CouplingRegime,
    pub regime_2: CouplingRegime,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// α = 2π/F with σ_α = 2πσ_F/F².
pub fn loss_from_finesse(finesse: Quantity) -> Result<Quantity> {
    if !(finesse.value > 0.0 && finesse.value.is_finite()) {
        return Err(Error::domain(format!("finesse must be positive, got {}", finesse.value)));
    }
    let f = finesse.value;
    Quantity::new(2.0 * PI / f, 2.0 * PI * finesse.sigma / (f * f))
}

/// F = 2π/α, `None` for a lossless channel.
pub fn finesse_from_loss(loss: Quantity) -> Result<Option<Quantity>> {
    if loss.value < 0.0 || !loss.value.is_finite() {
        return Err(Error::domain(format!("loss must be non-negative, got {}", loss.value)));
    }
    if loss.value == 0.0 {
        return Ok(None);
    }
    let a = loss.value;
    Quantity::new(2.0 * PI / a, 2.0 * PI * loss.sigma / (a * a)).map(Some)
}

/// σ of √R, bounded by √σ_R where the derivative diverges at R = 0.
fn sqrt_sigma(r: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let root = r.sqrt();
    let linear = if root > 0.0 { sigma / (2.0 * root) } else { f64::INFINITY };
    linear.min(sigma.sqrt())
}

/// Brings a reflectance into [0, 1], clamping values within 3σ of the range.
fn checked_reflectance(r: Quantity, label: &str) -> Result<(Quantity, Option<String>)> {
    if !r.value.is_finite() {
        return Err(Error::domain(format!("{label} is not finite")));
    }
    let allowance = 3.0 * r.sigma;
    if r.value > 1.0 {
        if r.value - 1.0 > allowance {
            return Err(Error::MeasurementInconsistency(format!(
                "{label} = {} exceeds 1 by more than 3 sigma ({}); check the reflection normalization",
                r.value, r.sigma
            )));
        }
        let warning = format!("{label} = {} exceeds 1 within noise; clamped to 1", r.value);
        return Ok((Quantity { value: 1.0, sigma: r.sigma }, Some(warning)));
    }
    if r.value < 0.0 {
        if -r.value > allowance {
            return Err(Error::MeasurementInconsistency(format!(
                "{label} = {} is negative by more than 3 sigma ({})",
                r.value, r.sigma
            )));
        }
        let warning = format!("{label} = {} is below 0 within noise; clamped to 0", r.value);
        return Ok((Quantity { value: 0.0, sigma: r.sigma }, Some(warning)));
    }
    Ok((r, None))
}

fn check_alpha(alpha: Quantity) -> Result<()> {
    if !(alpha.value > 0.0 && alpha.value < 1.0) {
        return Err(Error::domain(format!(
            "total round-trip loss must lie in (0, 1), got {}",
            alpha.value
        )));
    }
    Ok(())
}

fn transmittance(r: Quantity, alpha: Quantity, regime: CouplingRegime) -> Quantity {
    let root = r.value.sqrt();
    let branch = 1.0 - regime.sign() * root;
    let value = 0.5 * alpha.value * branch;
    let sigma = (0.5 * branch * alpha.sigma).hypot(0.5 * alpha.value * sqrt_sigma(r.value, r.sigma));
    Quantity { value, sigma }
}

/// T = (α/2)(1 − √R) undercoupled, (α/2)(1 + √R) overcoupled.
pub fn mirror_transmittance_from_reflectance(
    r_res: Quantity,
    alpha_tot: Quantity,
    regime: CouplingRegime,
) -> Result<Quantity> {
    check_alpha(alpha_tot)?;
    let (r, _) = checked_reflectance(r_res, "on-resonance reflectance")?;
    Ok(transmittance(r, alpha_tot, regime))
}

/// Three-channel budget from F_tot and the side reflectances, treating the
/// three inputs as independent.
pub fn budget(
    finesse_tot: Quantity,
    r1: Quantity,
    r2: Quantity,
    regime_1: CouplingRegime,
    regime_2: CouplingRegime,
) -> Result<LossBudget> {
    let alpha = loss_from_finesse(finesse_tot)?;
    check_alpha(alpha)?;
    let mut diagnostics = Vec::new();
    let (r1, w1) = checked_reflectance(r1, "R1")?;
    let (r2, w2) = checked_reflectance(r2, "R2")?;
    diagnostics.extend(w1);
    diagnostics.extend(w2);

    let mut t1 = transmittance(r1, alpha, regime_1);
    let mut t2 = transmittance(r2, alpha, regime_2);

    // α_int = α (s₁√R₁ + s₂√R₂)/2, differentiated in α, √R₁ and √R₂.
    let (s1, s2) = (regime_1.sign(), regime_2.sign());
    let mix = 0.5 * (s1 * r1.value.sqrt() + s2 * r2.value.sqrt());
    let mut alpha_int = Quantity {
        value: alpha.value - t1.value - t2.value,
        sigma: (mix * alpha.sigma)
            .hypot(0.5 * alpha.value * sqrt_sigma(r1.value, r1.sigma))
            .hypot(0.5 * alpha.value * sqrt_sigma(r2.value, r2.sigma)),
    };

    if alpha_int.value < 0.0 {
        if -alpha_int.value > alpha_int.sigma {
            let suspect = match (regime_1, regime_2) {
                (CouplingRegime::Undercoupled, CouplingRegime::Undercoupled) => {
                    "check the reflectance normalization".to_string()
                }
                _ => format!(
                    "regimes {regime_1}/{regime_2} put more than the total loss into the mirrors; an overcoupled branch is the likely mistake"
                ),
            };
            return Err(Error::MeasurementInconsistency(format!(
                "intrinsic loss {:.3e} is negative beyond its sigma {:.3e}; {suspect}",
                alpha_int.value, alpha_int.sigma
            )));
        }
        let scale = alpha.value / (t1.value + t2.value);
        t1 = t1.scale(scale);
        t2 = t2.scale(scale);
        diagnostics.push(format!(
            "intrinsic loss {:.3e} is negative within its sigma {:.3e}; clamped to 0 and mirror transmittances rescaled",
            alpha_int.value, alpha_int.sigma
        ));
        alpha_int.value = 0.0;
    }

    // Keep the construction identity exact in floating point.
    alpha_int.value = alpha_int.value.max(0.0);
    let residual = alpha.value - (t1.value + t2.value + alpha_int.value);
    alpha_int.value = (alpha_int.value + residual).max(0.0);

    let finesse_int = finesse_from_loss(alpha_int)?;
    if finesse_int.is_none() {
        diagnostics.push("intrinsic loss is zero: lossless cavity, intrinsic finesse unbounded".into());
    }

    Ok(LossBudget {
        alpha_tot: alpha,
        t1,
        t2,
        alpha_int,
        finesse_tot,
        finesse_int,
        regime_1,
        regime_2,
        diagnostics,
    })
}

/// Difference `a − b` of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDifference {
    pub difference: Quantity,
    /// |difference| in units of its sigma; `None` when the sigma is zero
    /// and the difference is not.
    pub significance: Option<f64>,
}

impl ChannelDifference {
    pub fn between(a: Quantity, b: Quantity) -> Self {
        let difference = a.minus(&b);
        Self {
            difference,
            significance: difference.significance().map(f64::abs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetComparison {
    pub alpha_tot: ChannelDifference,
    pub t1: ChannelDifference,
    pub t2: ChannelDifference,
    pub alpha_int: ChannelDifference,
}

/// Element-wise `a − b` with sigmas in quadrature.
pub fn compare_budgets(a: &LossBudget, b: &LossBudget) -> BudgetComparison {
    BudgetComparison {
        alpha_tot: ChannelDifference::between(a.alpha_tot, b.alpha_tot),
        t1: ChannelDifference::between(a.t1, b.t1),
        t2: ChannelDifference::between(a.t2, b.t2),
        alpha_int: ChannelDifference::between(a.alpha_int, b.alpha_int),
    }
}
