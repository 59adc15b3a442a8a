//! Error type shared by every stage of the pipeline.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("integration failed at lambda = {lambda}: {reason}")]
    Integration { lambda: Complex64, reason: String },

    #[error("counting certificate failed: {0}")]
    Counting(String),

    #[error("contour configuration: {0}")]
    Contour(String),

    #[error("branch of the square root is ambiguous: {0}")]
    Branch(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("normalization check failed: {0}")]
    Normalization(String),

    #[error("zero extraction failed: {0}")]
    Zeros(String),

    #[error("growth functional: {0}")]
    Growth(String),
}
