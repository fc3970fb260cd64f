//! Scalar base kernels, their derivatives, and matrix-valued kernels
//! obtained by applying operator matrices to them.

mod closed_form;
mod expr;
mod se;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use closed_form::{curl_free_closed_form, diagonal_kernel};
pub use expr::{
    apply_operator_to_expr, eval_matrix_kernel, transform_kernel, transform_kernel_columns, transform_kernel_with,
    MatrixKernelExpr, Side,
};
pub use se::{
    hermite_he, se_derivative, se_eval, DerivativeKernel, DerivativeMultiIndex, SeHyperparams, SquaredExponential,
    MAX_DERIVATIVE_ORDER,
};

use crate::operator::OperatorSpec;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooHigh { order: u32, max: u32 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid hyperparameters {0:?}")]
    InvalidHyperparams(SeHyperparams),
}

/// A matrix-valued covariance `K(x, x')` with square `out_dim x out_dim` blocks.
pub trait MatrixKernel: Send + Sync {
    fn input_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn eval(&self, x: &[f64], x2: &[f64]) -> DMatrix<f64>;
}

impl<B: DerivativeKernel + Clone> MatrixKernel for MatrixKernelExpr<B> {
    fn input_dim(&self) -> usize {
        MatrixKernelExpr::input_dim(self)
    }

    fn out_dim(&self) -> usize {
        debug_assert_eq!(self.rows(), self.cols());
        self.rows()
    }

    fn eval(&self, x: &[f64], x2: &[f64]) -> DMatrix<f64> {
        eval_matrix_kernel(self, x, x2)
    }
}

#[derive(Clone, Debug)]
pub struct DiagonalKernel {
    pub theta: SeHyperparams,
    pub outputs: usize,
    pub dim: usize,
}

impl MatrixKernel for DiagonalKernel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn out_dim(&self) -> usize {
        self.outputs
    }

    fn eval(&self, x: &[f64], x2: &[f64]) -> DMatrix<f64> {
        diagonal_kernel(x, x2, &self.theta, self.outputs)
    }
}

#[derive(Clone, Debug)]
pub struct CurlFreeKernel {
    pub theta: SeHyperparams,
}

impl MatrixKernel for CurlFreeKernel {
    fn input_dim(&self) -> usize {
        3
    }

    fn out_dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], x2: &[f64]) -> DMatrix<f64> {
        curl_free_closed_form(x, x2, &self.theta)
    }
}

/// Sum of kernels with matching shapes.
pub struct SumKernel(pub Vec<Box<dyn MatrixKernel>>);

impl MatrixKernel for SumKernel {
    fn input_dim(&self) -> usize {
        self.0[0].input_dim()
    }

    fn out_dim(&self) -> usize {
        self.0[0].out_dim()
    }

    fn eval(&self, x: &[f64], x2: &[f64]) -> DMatrix<f64> {
        let mut acc = self.0[0].eval(x, x2);
        for k in &self.0[1..] {
            acc += k.eval(x, x2);
        }
        acc
    }
}

/// Where a transformed kernel gets its `G` from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GOperatorSource {
    /// The literal string `"auto-from-F"`: construct `G` from the constraint operator.
    Auto(String),
    Explicit(OperatorSpec),
}

impl GOperatorSource {
    pub const AUTO: &'static str = "auto-from-F";

    pub fn is_auto(&self) -> bool {
        matches!(self, GOperatorSource::Auto(s) if s == Self::AUTO)
    }
}

/// Kernel selection as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(rename = "type")]
    pub kind: KernelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_operator: Option<GOperatorSource>,
    #[serde(default)]
    pub hyperparams: SeHyperparams,
    /// Separate hyperparameters for each latent component of a transformed kernel.
    #[serde(default)]
    pub per_column_hyperparams: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Diagonal,
    #[serde(rename = "curl_free_3d")]
    CurlFree3d,
    Transformed,
}
