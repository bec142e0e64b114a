//! Atom–cavity cooperativity C = K·(σ₀/A_eff)·F.

use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantity::Quantity;

/// Default convention constant K.
pub const DEFAULT_PREFACTOR: f64 = FRAC_2_PI;

/// Cooperativity quoted for the reference cavity.
pub const REFERENCE_COOPERATIVITY: f64 = 90.0;

/// Intrinsic round-trip loss of the reference cavity.
pub const REFERENCE_INTRINSIC_LOSS: f64 = 0.0031;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooperativityScenario {
    /// σ₀/A_eff.
    pub sigma0_over_aeff: f64,
    pub finesse: Quantity,
    /// Convention constant K.
    pub prefactor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl CooperativityScenario {
    pub fn new(sigma0_over_aeff: f64, finesse: Quantity, prefactor: f64) -> Result<Self> {
        let s = Self {
            sigma0_over_aeff,
            finesse,
            prefactor,
            label: None,
        };
        s.validate()?;
        Ok(s)
    }

    /// Reference scenario: the intrinsic finesse 2π/0.31% with σ₀/A_eff
    /// chosen so that C = 90 under the default K. The ratio is derived under
    /// that convention, not measured.
    pub fn reference() -> Self {
        let finesse = 2.0 * PI / REFERENCE_INTRINSIC_LOSS;
        Self {
            sigma0_over_aeff: REFERENCE_COOPERATIVITY / (DEFAULT_PREFACTOR * finesse),
            finesse: Quantity::exact(finesse),
            prefactor: DEFAULT_PREFACTOR,
            label: Some("reference (ratio derived under K = 2/π)".into()),
        }
    }

    pub fn with_finesse(&self, finesse: Quantity) -> Self {
        Self {
            finesse,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma0_over_aeff", self.sigma0_over_aeff),
            ("finesse", self.finesse.value),
            ("prefactor", self.prefactor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// C = K·(σ₀/A_eff)·F, uncertainty from the finesse only.
pub fn cooperativity(scenario: &CooperativityScenario) -> Result<Quantity> {
    scenario.validate()?;
    Ok(scenario.finesse.scale(scenario.prefactor * scenario.sigma0_over_aeff))
}

/// F = C/(K·σ₀/A_eff).
pub fn required_finesse(c_target: f64, sigma0_over_aeff: f64, prefactor: f64) -> Result<f64> {
    for (name, v) in [
        ("target cooperativity", c_target),
        ("sigma0_over_aeff", sigma0_over_aeff),
        ("prefactor", prefactor),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(c_target / (prefactor * sigma0_over_aeff))
}
