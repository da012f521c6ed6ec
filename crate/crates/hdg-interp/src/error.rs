//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by mesh construction, assembly, solvers and the study driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mesh integrity: {0}")]
    MeshIntegrity(String),

    #[error("unsupported degree: {0}")]
    UnsupportedDegree(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("linear algebra: {0}")]
    LinearAlgebra(String),

    #[error("time step failed: {0}")]
    StepFailed(String),

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
