//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fibercav_core::absorption::GrowthModel;
use fibercav_core::budget::CouplingRegime;
use fibercav_core::spectral::Channel;

#[derive(Debug, Clone, Parser)]
#[command(name = "fibercav", version, about = "Fiber Fabry-Perot cavity analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML configuration file; falls back to $FIBERCAV_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Directory for reports and run records.
    #[arg(long, global = true, value_name = "DIR", default_value = "fibercav-out")]
    pub out: PathBuf,
    /// Group index used for cavity lengths.
    #[arg(long = "group-index", global = true, value_name = "X")]
    pub group_index: Option<f64>,
    /// Scale spectra so their plateau reads 1.
    #[arg(long, global = true)]
    pub normalize: bool,
    /// Also write tidy CSVs for external plotting.
    #[arg(long = "emit-plot-data", global = true)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Under,
    Over,
}

impl From<RegimeArg> for CouplingRegime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Under => CouplingRegime::Undercoupled,
            RegimeArg::Over => CouplingRegime::Overcoupled,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Transmission,
    Reflection,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Self {
        match c {
            ChannelArg::Transmission => Channel::Transmission,
            ChannelArg::Reflection => Channel::Reflection,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GrowthArg {
    Linear,
    ExponentialOnset,
}

impl From<GrowthArg> for GrowthModel {
    fn from(g: GrowthArg) -> Self {
        match g {
            GrowthArg::Linear => GrowthModel::Linear,
            GrowthArg::ExponentialOnset => GrowthModel::ExponentialOnset,
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Synthesize a cavity spectrum from the configured loss channels.
    Synth {
        /// Noise sigma as a fraction of the peak height.
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Fit resonances and derive FSR, finesse and length.
    Fit {
        /// Spectrum CSV.
        #[arg(required_unless_present = "batch", conflicts_with = "batch")]
        input: Option<PathBuf>,
        /// Fit every CSV in a directory.
        #[arg(long, value_name = "DIR")]
        batch: Option<PathBuf>,
        #[arg(long, value_enum)]
        channel: Option<ChannelArg>,
    },
    /// Split the total loss into mirror and intrinsic channels.
    Budget(BudgetArgs),
    /// Classify pulling-loss traces and fit their growth.
    Pull {
        /// Pull-trace CSV.
        #[arg(required_unless_present = "batch", conflicts_with = "batch")]
        input: Option<PathBuf>,
        /// Process every CSV in a directory.
        #[arg(long, value_name = "DIR")]
        batch: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<GrowthArg>,
    },
    /// Solve the fundamental nanofiber mode.
    Modes {
        #[arg(long = "diameter-nm")]
        diameter_nm: Option<f64>,
        #[arg(long = "wavelength-nm")]
        wavelength_nm: Option<f64>,
    },
    /// Cooperativity from the mode-area ratio and finesse.
    Coop {
        #[arg(long)]
        finesse: Option<f64>,
        #[arg(long = "finesse-sigma")]
        finesse_sigma: Option<f64>,
        /// σ₀/A_eff.
        #[arg(long)]
        ratio: Option<f64>,
        /// Convention constant K.
        #[arg(long)]
        prefactor: Option<f64>,
    },
    /// Summarize run records in parenthesized-uncertainty notation.
    Report {
        /// Run-record JSON files.
        #[arg(required_unless_present = "batch", conflicts_with = "batch")]
        records: Vec<PathBuf>,
        /// Summarize every record in a directory.
        #[arg(long, value_name = "DIR")]
        batch: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct BudgetArgs {
    #[arg(long)]
    pub finesse: f64,
    #[arg(long = "finesse-sigma", default_value_t = 0.0)]
    pub finesse_sigma: f64,
    /// On-resonance reflectance seen from side 1.
    #[arg(long)]
    pub r1: f64,
    #[arg(long = "r1-sigma", default_value_t = 0.0)]
    pub r1_sigma: f64,
    /// On-resonance reflectance seen from side 2.
    #[arg(long)]
    pub r2: f64,
    #[arg(long = "r2-sigma", default_value_t = 0.0)]
    pub r2_sigma: f64,
    /// Coupling regime for both sides.
    #[arg(long, value_enum)]
    pub regime: Option<RegimeArg>,
    #[arg(long, value_enum)]
    pub regime1: Option<RegimeArg>,
    #[arg(long, value_enum)]
    pub regime2: Option<RegimeArg>,
}
