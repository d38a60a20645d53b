//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the statistical pipeline and its supporting numerics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("insufficient sample size: need n >= {min}, got n = {got}")]
    InsufficientSample { min: usize, got: usize },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("matrix not positive semidefinite: smallest eigenvalue {min_eigenvalue}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("replication {rep} of cell [{cell}] failed: {source}")]
    Replication {
        cell: String,
        rep: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap the error with the pipeline stage it occurred in.
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by numerical degeneracy of otherwise
    /// well-formed input, as opposed to usage or input errors.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Error::DegenerateVariance(_)
            | Error::DegenerateSpectrum(_)
            | Error::DegenerateData(_)
            | Error::RootFinding(_)
            | Error::NotPsd { .. } => true,
            Error::Stage { source, .. } | Error::Replication { source, .. } => {
                source.is_degenerate()
            }
            _ => false,
        }
    }
}
