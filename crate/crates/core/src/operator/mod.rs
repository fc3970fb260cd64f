//! Linear differential operators as polynomial matrices, and construction
//! of an annihilating operator `G` with `F G = 0`.
//!
//! Derivative symbols commute, so a scalar operator with constant
//! coefficients is a polynomial in `d/dx1, ..., d/dxp`. Coefficients are
//! exact rationals; floating-point input is converted without rounding.

mod ansatz;
mod construct;
mod matrix;
mod monomial;
mod nullspace;
mod poly;
pub mod spec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

pub use ansatz::{build_ansatz_system, AnsatzBasis, AnsatzSystem};
pub use construct::{assemble_g, construct_g, escalation_schedule, ConstructOptions, GammaSolution, DEFAULT_MAX_DEGREE};
pub use matrix::{
    make_curl_operator_3d, make_divergence_operator, make_gradient_operator, symbolic_product, OperatorMatrix,
};
pub use monomial::Monomial;
pub use nullspace::{
    max_abs, normalize_leading, nullspace, nullspace_exact, nullspace_floating, Arithmetic, RationalMatrix,
    DEFAULT_FLOAT_TOL,
};
pub use poly::{Degree, OperatorPoly};
pub use spec::{operator_to_json, parse_operator_json, OperatorSpec};

pub type Rational = BigRational;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("variable count mismatch: expected {expected}, found {found}")]
    VarMismatch { expected: usize, found: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
    #[error("no annihilating operator found with ansatz degree up to {max_degree}")]
    NoAnnihilatorFound { max_degree: u32 },
    #[error("malformed operator JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("invalid operator spec: {0}")]
    Parse(String),
}

/// Exact conversion; every finite `f64` is a dyadic rational.
pub fn rational_from_f64(x: f64) -> Result<Rational, OperatorError> {
    if !x.is_finite() {
        return Err(OperatorError::NonFinite(x));
    }
    BigRational::from_float(x).ok_or(OperatorError::NonFinite(x))
}

pub fn rational_from_i64(x: i64) -> Rational {
    BigRational::from_integer(BigInt::from(x))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
