//! OH/OD overtone absorption and pulling-loss traces.

pub mod bands;
pub mod pull;

pub use bands::{
    band_absorption, overtone_center, transparency_check, transparency_check_in, AbsorptionBand, Species,
    TransparencyCheck, DEFAULT_BAND_WIDTH_NM, SI_OD_FUNDAMENTAL_NM, SI_OH_FUNDAMENTAL_NM,
};
pub use pull::{
    classify_flame, fit_loss_growth, load_pull_trace, smooth, write_pull_trace, FlameClassification, FlameLabel,
    FlameThresholds, GrowthFit, GrowthModel, PullMetadata, PullTrace,
};
