use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema: missing required column `{column}`")]
    MissingColumn { column: String },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    EmptyInput(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("formula: {message} at position {position}")]
    Formula { position: usize, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate phrase `{0}`: zero time span")]
    DegeneratePhrase(String),

    #[error("insufficient distinct quantiles: {0}")]
    InsufficientQuantiles(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("did not converge: {message}")]
    NonConvergence { message: String, trace: Vec<f64> },

    #[error("models are not comparable: {0}")]
    NotComparable(String),

    #[error("config: {0}")]
    Config(String),

    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable machine-readable code, printed by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::MissingColumn { .. } => "E_SCHEMA",
            Error::Parse { .. } => "E_PARSE",
            Error::EmptyInput(_) => "E_EMPTY",
            Error::InvalidInput(_) => "E_INVALID",
            Error::UnknownFeature(_) => "E_UNKNOWN_FEATURE",
            Error::Formula { .. } => "E_FORMULA",
            Error::Unsupported(_) => "E_UNSUPPORTED",
            Error::DegeneratePhrase(_) => "E_DEGENERATE_PHRASE",
            Error::InsufficientQuantiles(_) => "E_QUANTILES",
            Error::Numerical(_) => "E_NUMERICAL",
            Error::NonConvergence { .. } => "E_CONVERGENCE",
            Error::NotComparable(_) => "E_NOT_COMPARABLE",
            Error::Config(_) => "E_CONFIG",
            Error::Stage { source, .. } => source.code(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }
    }
}
