//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid surface description (non-positive radial function, bad order, ...).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Point outside the domain of a formula (e.g. the kernel singularity).
    #[error("domain error: {0}")]
    Domain(String),

    /// A quadrature was asked for a point where it is not accurate.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    /// Singular or ill-conditioned linear system.
    #[error("solver error: {msg} (condition estimate {condition:.3e})")]
    Solver { msg: String, condition: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("evaluator failure at node {node}: {msg}")]
    Evaluator { node: usize, msg: String },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
