use fibercav_core::ErrorKind;
use serde::Serialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INCONSISTENCY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fibercav_core::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("run record {path} was modified: stored id {stored}, recomputed {computed}")]
    Tampered {
        path: String,
        stored: String,
        computed: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Machine-readable form written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn io(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Solver => EXIT_SOLVER,
                ErrorKind::Inconsistency => EXIT_INCONSISTENCY,
            },
            _ => EXIT_VALIDATION,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                fibercav_core::Error::Domain(_) => "domain",
                fibercav_core::Error::SingularCavity(_) => "singular_cavity",
                fibercav_core::Error::Parse { .. } => "parse",
                fibercav_core::Error::FitFailure(_) => "fit_failure",
                fibercav_core::Error::WindowTooNarrow(_) => "window_too_narrow",
                fibercav_core::Error::InsufficientPeaks(_) => "insufficient_peaks",
                fibercav_core::Error::InsufficientData(_) => "insufficient_data",
                fibercav_core::Error::MeasurementInconsistency(_) => "measurement_inconsistency",
                fibercav_core::Error::NumericalFailure(_) => "numerical_failure",
                fibercav_core::Error::Io { .. } => "io",
                fibercav_core::Error::Json { .. } => "json",
            },
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Tampered { .. } => "tampered_record",
            CliError::Io { .. } => "io",
            CliError::Json { .. } => "json",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: self.category(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}
