//! Multi-output GP regression: block Gram assembly, jittered Cholesky,
//! prediction, marginal likelihood, and hyperparameter fitting.

mod data;
mod fit;
mod gram;
mod model;
mod optimize;
mod spec;

use thiserror::Error;

pub use data::{rows_of, select_rows, stack_rows, unstack_rows, Dataset};
pub use fit::{fit_hyperparameters, negative_lml, FitConfig, FittedHyperparams, KernelFamily};
pub use gram::{
    assemble_gram, assemble_gram_with, cholesky_jitter, cross_covariance, cross_covariance_with, JitteredCholesky,
    JITTER_STEPS,
};
pub use model::{log_marginal_likelihood, predict, Conditioned, GpModel, PredictionResult, VARIANCE_CLAMP};
pub use optimize::{nelder_mead, Minimum, NelderMeadOptions};
pub use spec::{ModelSpec, ResolvedModel};

use crate::kernel::KernelError;
use crate::operator::OperatorError;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("matrix not positive definite after jitter escalation up to {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("hyperparameter fit failed: {0}")]
    Fit(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
