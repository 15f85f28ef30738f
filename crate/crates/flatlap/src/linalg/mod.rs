//! Dense and sparse linear algebra kernels used by the solvers.

mod cg;
mod cholesky;
mod dense;
mod eigh;
mod sparse;

pub use cg::{conjugate_gradient, CgReport};
pub use cholesky::EnvelopeCholesky;
pub use dense::DMat;
pub use eigh::{eigh, eigvalsh, HermitianEigen};
pub use sparse::CsrMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}
