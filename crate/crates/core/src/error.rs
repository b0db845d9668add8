use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed frame record: {0}")]
    Parse(String),
    #[error("no person detected in frame")]
    EmptyFrame,
    #[error("empty sequence: {0}")]
    EmptySequence(String),
    #[error("joint {joint} missing in {fraction:.3} of frames (limit {limit})")]
    TooManyGaps {
        joint: String,
        fraction: f64,
        limit: f64,
    },
    #[error("degenerate skeleton in frame {frame}: {reason}")]
    DegenerateSkeleton { frame: usize, reason: String },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("joint set mismatch: expected {expected}, found {found}")]
    JointSetMismatch { expected: String, found: String },
    #[error(
        "eigen solver did not converge for component {component} after {iterations} iterations"
    )]
    EigenConvergence { component: usize, iterations: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("unknown label: {0}")]
    Label(String),
    #[error("lexicon is empty")]
    EmptyLexicon,
    #[error("unsupported index format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("corrupt index file: {0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-friendly name of the error kind, used in CLI status lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::EmptyFrame => "empty-frame",
            Error::EmptySequence(_) => "empty-sequence",
            Error::TooManyGaps { .. } => "too-many-gaps",
            Error::DegenerateSkeleton { .. } => "degenerate-skeleton",
            Error::Shape(_) => "shape",
            Error::JointSetMismatch { .. } => "joint-set-mismatch",
            Error::EigenConvergence { .. } => "eigen-convergence",
            Error::DegenerateData(_) => "degenerate-data",
            Error::Param(_) => "param",
            Error::Label(_) => "label",
            Error::EmptyLexicon => "empty-lexicon",
            Error::Version { .. } => "version",
            Error::Format(_) => "format",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
