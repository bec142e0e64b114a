//! JSON report types and their one-line text summaries.

use std::collections::BTreeMap;

use fibercav_core::absorption::{FlameClassification, GrowthFit, GrowthModel, PullMetadata, TransparencyCheck};
use fibercav_core::budget::LossBudget;
use fibercav_core::fit::SpectrumAnalysis;
use fibercav_core::mode::GuidedMode;
use fibercav_core::spectral::{CavityModel, Channel, OnResonance};
use fibercav_core::{render, render_percent, Precision, Quantity};
use serde::{Deserialize, Serialize};

const TWO: Precision = Precision::Significant(2);

/// Two significant digits; the sigma is dropped when negligible.
fn render_two(q: &Quantity) -> String {
    if q.relative_sigma() < 1e-5 {
        render(&Quantity::exact(q.value), TWO)
    } else {
        render(q, TWO)
    }
}

fn percent_two(q: &Quantity) -> String {
    if q.relative_sigma() < 1e-5 {
        render_percent(&Quantity::exact(q.value), TWO)
    } else {
        render_percent(q, TWO)
    }
}

/// Precision from the sigma, or five plain digits when the sigma is
/// negligible (noise-free synthetic data).
fn render_measured(q: &Quantity) -> String {
    if q.relative_sigma() < 1e-5 {
        render(&Quantity::exact(q.value), Precision::Significant(5))
    } else {
        render(q, Precision::FromSigma)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub model: CavityModel,
    pub seed: u64,
    pub noise: f64,
    pub samples: usize,
    pub fsr_hz: f64,
    pub fwhm_hz: f64,
    pub finesse: f64,
    pub total_loss: f64,
    pub on_resonance: OnResonance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub source: String,
    pub channel: Channel,
    pub normalized: bool,
    pub analysis: SpectrumAnalysis,
    pub rendered: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    pub finesse: Quantity,
    pub r1: Quantity,
    pub r2: Quantity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub inputs: BudgetInputs,
    pub budget: LossBudget,
    pub rendered: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullReport {
    pub source: String,
    pub metadata: PullMetadata,
    pub samples: usize,
    pub classification: FlameClassification,
    pub growth: GrowthFit,
    pub probe_transparency: TransparencyCheck,
    pub reference_transparency: TransparencyCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoopReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub sigma0_over_aeff: f64,
    pub finesse: Quantity,
    pub cooperativity: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

pub fn render_fit(analysis: &SpectrumAnalysis) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    out.insert("fwhm_mhz".into(), render_two(&analysis.fwhm.scale(1e-6)));
    if let Some(fsr) = analysis.fsr {
        out.insert("fsr_ghz".into(), render_measured(&fsr.scale(1e-9)));
    }
    if let Some(f) = analysis.finesse {
        out.insert("finesse".into(), render_two(&f));
    }
    if let Some(l) = analysis.length_mm {
        out.insert("length_mm".into(), render_measured(&l));
    }
    out
}

pub fn render_budget(b: &LossBudget) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    out.insert("alpha_tot".into(), percent_two(&b.alpha_tot));
    out.insert("t1".into(), percent_two(&b.t1));
    out.insert("t2".into(), percent_two(&b.t2));
    out.insert("alpha_int".into(), percent_two(&b.alpha_int));
    out.insert("finesse_tot".into(), render_two(&b.finesse_tot));
    out.insert(
        "finesse_int".into(),
        b.finesse_int.map_or_else(|| "unbounded".to_string(), |f| render_two(&f)),
    );
    out
}

fn join(map: &BTreeMap<String, String>, keys: &[(&str, &str, &str)]) -> String {
    keys.iter()
        .filter_map(|(key, label, unit)| map.get(*key).map(|v| format!("{label} = {v}{unit}")))
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn summarize_synth(r: &SynthReport) -> String {
    format!(
        "synthesized {} samples: FSR {:.4} GHz, FWHM {:.3} MHz, finesse {:.1}, total loss {:.4}%",
        r.samples,
        r.fsr_hz * 1e-9,
        r.fwhm_hz * 1e-6,
        r.finesse,
        r.total_loss * 100.0
    )
}

pub fn summarize_fit(r: &FitReport) -> String {
    let values = join(
        &r.rendered,
        &[
            ("fwhm_mhz", "FWHM", " MHz"),
            ("fsr_ghz", "FSR", " GHz"),
            ("finesse", "finesse", ""),
            ("length_mm", "length", " mm"),
        ],
    );
    format!(
        "{}: {} resonances; {values} (n_g = {})",
        r.source,
        r.analysis.peaks.len(),
        r.analysis.group_index
    )
}

pub fn summarize_budget(r: &BudgetReport) -> String {
    let values = join(
        &r.rendered,
        &[
            ("alpha_tot", "α_tot", ""),
            ("t1", "T₁", ""),
            ("t2", "T₂", ""),
            ("alpha_int", "α_int", ""),
            ("finesse_tot", "F_tot", ""),
            ("finesse_int", "F_int", ""),
        ],
    );
    format!("budget ({}/{}): {values}", r.budget.regime_1, r.budget.regime_2)
}

pub fn summarize_pull(r: &PullReport) -> String {
    let label = serde_json::to_value(r.classification.label).expect("label serializes");
    let growth = match r.growth.model {
        GrowthModel::Linear => format!("slope {:.3e} /s", r.growth.rate.value),
        GrowthModel::ExponentialOnset => format!(
            "rate {:.3e} /s, onset {:.1} s",
            r.growth.rate.value,
            r.growth.onset_time_s.map_or(f64::NAN, |q| q.value)
        ),
    };
    format!(
        "{}: {} (final loss {:.2}%, growth score {:.2}, reference {}); {growth}; probe {} nm {}",
        r.source,
        label.as_str().unwrap_or_default(),
        r.classification.final_loss * 100.0,
        r.classification.monotone_growth_score,
        if r.classification.reference_ok { "ok" } else { "not ok" },
        r.metadata.probe_wavelength_nm,
        if r.probe_transparency.clear { "clear" } else { "absorbed" },
    )
}

pub fn summarize_mode(m: &GuidedMode) -> String {
    format!(
        "HE11: V = {:.4}, n_eff = {:.7}, A_eff = {:.4} µm², surface/peak intensity = {:.4}",
        m.v_number, m.n_eff, m.a_eff_um2, m.surface_intensity_ratio
    )
}

pub fn summarize_coop(r: &CoopReport) -> String {
    format!(
        "C = {} at F = {} (K = {:.6}, σ₀/A_eff = {:.6})",
        render_two(&r.cooperativity),
        render_two(&r.finesse),
        r.k,
        r.sigma0_over_aeff
    )
}
