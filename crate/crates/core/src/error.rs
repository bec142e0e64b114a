use thiserror::Error;

/// Broad failure classes, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: a precondition, a file format or a value range was violated.
    Validation,
    /// A fit or numerical solver did not produce a usable answer.
    Solver,
    /// Inputs are individually valid but physically inconsistent with each other.
    Inconsistency,
}

/// Last state of a least-squares fit that did not converge.
#[derive(Debug, Clone, PartialEq)]
pub struct FitFailure {
    pub reason: String,
    pub iterations: usize,
    pub last_params: Vec<f64>,
    pub last_cost: f64,
    pub damping: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular cavity: {0}")]
    SingularCavity(String),

    #[error("{source_name}: row {row}: {message}")]
    Parse {
        source_name: String,
        /// 1-based data row (the header is not counted); 0 refers to the header.
        row: usize,
        message: String,
    },

    #[error("fit failed after {} iterations: {}", .0.iterations, .0.reason)]
    FitFailure(Box<FitFailure>),

    #[error("window too narrow: {0}")]
    WindowTooNarrow(String),

    #[error("insufficient peaks: need at least 2, found {0}")]
    InsufficientPeaks(usize),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("measurement inconsistency: {0}")]
    MeasurementInconsistency(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

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

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::SingularCavity(_)
            | Error::Parse { .. }
            | Error::WindowTooNarrow(_)
            | Error::InsufficientPeaks(_)
            | Error::InsufficientData(_)
            | Error::Io { .. }
            | Error::Json { .. } => ErrorKind::Validation,
            Error::FitFailure(_) | Error::NumericalFailure(_) => ErrorKind::Solver,
            Error::MeasurementInconsistency(_) => ErrorKind::Inconsistency,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(source_name: &str, row: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            row,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
