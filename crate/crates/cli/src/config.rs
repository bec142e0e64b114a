//! TOML configuration with one flat section per analysis stage.

use std::path::{Path, PathBuf};

use fibercav_core::absorption::{AbsorptionBand, GrowthModel, Species};
use fibercav_core::budget::CouplingRegime;
use fibercav_core::coop::{DEFAULT_PREFACTOR, REFERENCE_INTRINSIC_LOSS};
use fibercav_core::fit::Background;
use fibercav_core::mode::DEFAULT_SILICA_INDEX;
use fibercav_core::spectral::{Channel, DEFAULT_GROUP_INDEX};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_ENV: &str = "FIBERCAV_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub group_index: f64,
    pub normalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub channel: Channel,
    /// Linear for transmission, linear_etalon for reflection when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background: Option<Background>,
    pub window_multiple: f64,
    pub prominence: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub regime_1: CouplingRegime,
    pub regime_2: CouplingRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub t1: f64,
    pub t2: f64,
    pub alpha_int: f64,
    pub fsr_hz: f64,
    pub resonances: usize,
    pub samples_per_fwhm: f64,
    /// Gaussian noise sigma as a fraction of the transmission peak height.
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PullSection {
    pub final_loss_high: f64,
    pub final_loss_low: f64,
    pub growth_model: GrowthModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub species: Species,
    pub fundamental_nm: f64,
    #[serde(default = "first_order")]
    pub overtone_order: u32,
    pub width_nm: f64,
    pub peak_loss: f64,
}

fn first_order() -> u32 {
    1
}

impl BandConfig {
    pub fn to_band(&self) -> fibercav_core::Result<AbsorptionBand> {
        let center = fibercav_core::absorption::overtone_center(self.fundamental_nm, self.overtone_order)?;
        AbsorptionBand::new(
            self.species,
            self.fundamental_nm,
            self.overtone_order,
            center,
            self.width_nm,
            self.peak_loss,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbsorptionSection {
    pub threshold: f64,
    pub bands: Vec<BandConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeSection {
    pub diameter_nm: f64,
    pub wavelength_nm: f64,
    pub silica_index: f64,
    pub cladding_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoopSection {
    pub prefactor: f64,
    pub sigma0_over_aeff: f64,
    pub finesse: f64,
    pub finesse_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub run: RunSection,
    pub spectrum: SpectrumSection,
    pub fit: FitSection,
    pub budget: BudgetSection,
    pub synth: SynthSection,
    pub pull: PullSection,
    pub absorption: AbsorptionSection,
    pub mode: ModeSection,
    pub coop: CoopSection,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            group_index: DEFAULT_GROUP_INDEX,
            normalize: false,
        }
    }
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            channel: Channel::Transmission,
            background: None,
            window_multiple: 5.0,
            prominence: 0.3,
            max_iterations: 200,
        }
    }
}

impl Default for BudgetSection {
    fn default() -> Self {
        Self {
            regime_1: CouplingRegime::Undercoupled,
            regime_2: CouplingRegime::Undercoupled,
        }
    }
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            t1: 0.000867,
            t2: 0.000867,
            alpha_int: REFERENCE_INTRINSIC_LOSS,
            fsr_hz: 3.8e9,
            resonances: 3,
            samples_per_fwhm: 20.0,
            noise: 0.0,
        }
    }
}

impl Default for PullSection {
    fn default() -> Self {
        Self {
            final_loss_high: 0.04,
            final_loss_low: 0.02,
            growth_model: GrowthModel::ExponentialOnset,
        }
    }
}

impl Default for AbsorptionSection {
    fn default() -> Self {
        let od = AbsorptionBand::si_od(1.0);
        Self {
            threshold: 1e-3,
            bands: vec![BandConfig {
                species: od.species,
                fundamental_nm: od.fundamental_wavelength_nm,
                overtone_order: od.overtone_order,
                width_nm: od.width_nm,
                peak_loss: od.peak_loss,
            }],
        }
    }
}

impl Default for ModeSection {
    fn default() -> Self {
        Self {
            diameter_nm: 650.0,
            wavelength_nm: 1389.0,
            silica_index: DEFAULT_SILICA_INDEX,
            cladding_index: 1.0,
        }
    }
}

impl Default for CoopSection {
    fn default() -> Self {
        let reference = fibercav_core::coop::CooperativityScenario::reference();
        Self {
            prefactor: DEFAULT_PREFACTOR,
            sigma0_over_aeff: reference.sigma0_over_aeff,
            finesse: reference.finesse.value,
            finesse_sigma: reference.finesse.sigma,
        }
    }
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

fn fraction(field: &str, v: f64) -> Result<(), CliError> {
    if (0.0..1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(field, format!("must lie in [0, 1), got {v}")))
    }
}

impl ToolConfig {
    /// Reads a TOML file; missing keys take their defaults.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: ToolConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        config.validate()?;
        Ok(config)
    }

    /// `--config`, then `FIBERCAV_CONFIG`, then built-in defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<(Self, Option<PathBuf>), CliError> {
        let path = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
        match path {
            Some(p) => Ok((Self::load(&p)?, Some(p))),
            None => Ok((Self::default(), None)),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn background(&self) -> Background {
        self.fit.background.unwrap_or(match self.fit.channel {
            Channel::Transmission => Background::Linear,
            Channel::Reflection => Background::LinearEtalon,
        })
    }

    pub fn bands(&self) -> Result<Vec<AbsorptionBand>, CliError> {
        self.absorption
            .bands
            .iter()
            .enumerate()
            .map(|(i, b)| b.to_band().map_err(|e| invalid(&format!("absorption.bands[{i}]"), e)))
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.spectrum;
        if !(s.group_index >= 1.0 && s.group_index.is_finite()) {
            return Err(invalid("spectrum.group_index", format!("must be at least 1, got {}", s.group_index)));
        }
        let f = &self.fit;
        positive("fit.window_multiple", f.window_multiple)?;
        if !(f.prominence > 0.0 && f.prominence < 1.0) {
            return Err(invalid("fit.prominence", format!("must lie in (0, 1), got {}", f.prominence)));
        }
        if f.max_iterations == 0 {
            return Err(invalid("fit.max_iterations", "must be at least 1"));
        }
        let y = &self.synth;
        fraction("synth.t1", y.t1)?;
        fraction("synth.t2", y.t2)?;
        fraction("synth.alpha_int", y.alpha_int)?;
        let total = y.t1 + y.t2 + y.alpha_int;
        if !(total > 0.0 && total < 1.0) {
            return Err(invalid("synth", format!("total loss must lie in (0, 1), got {total}")));
        }
        positive("synth.fsr_hz", y.fsr_hz)?;
        positive("synth.samples_per_fwhm", y.samples_per_fwhm)?;
        if y.resonances == 0 {
            return Err(invalid("synth.resonances", "must be at least 1"));
        }
        if !(y.noise >= 0.0 && y.noise.is_finite()) {
            return Err(invalid("synth.noise", format!("must be non-negative, got {}", y.noise)));
        }
        let p = &self.pull;
        if !(p.final_loss_low > 0.0 && p.final_loss_low <= p.final_loss_high && p.final_loss_high < 1.0) {
            return Err(invalid(
                "pull",
                format!(
                    "need 0 < final_loss_low <= final_loss_high < 1, got {} and {}",
                    p.final_loss_low, p.final_loss_high
                ),
            ));
        }
        positive("absorption.threshold", self.absorption.threshold)?;
        self.bands()?;
        let m = &self.mode;
        positive("mode.diameter_nm", m.diameter_nm)?;
        positive("mode.wavelength_nm", m.wavelength_nm)?;
        if !(m.cladding_index >= 1.0 && m.silica_index > m.cladding_index) {
            return Err(invalid(
                "mode",
                format!(
                    "need silica_index > cladding_index >= 1, got {} and {}",
                    m.silica_index, m.cladding_index
                ),
            ));
        }
        let c = &self.coop;
        positive("coop.prefactor", c.prefactor)?;
        positive("coop.sigma0_over_aeff", c.sigma0_over_aeff)?;
        positive("coop.finesse", c.finesse)?;
        if !(c.finesse_sigma >= 0.0 && c.finesse_sigma.is_finite()) {
            return Err(invalid("coop.finesse_sigma", format!("must be non-negative, got {}", c.finesse_sigma)));
        }
        Ok(())
    }
}
