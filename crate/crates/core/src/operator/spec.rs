//! JSON exchange format for operator matrices.
//!
//! ```json
//! {"vars": 2, "rows": 1, "cols": 2,
//!  "entries": [{"row": 0, "col": 0, "terms": [{"coeff": 1, "exponents": [1, 0]}]}]}
//! ```
//!
//! Indices are 0-based and omitted entries are zero. Coefficients are JSON
//! numbers or strings holding an exact fraction such as `"-1/3"`.

use std::str::FromStr;

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::matrix::OperatorMatrix;
use super::monomial::Monomial;
use super::poly::OperatorPoly;
use super::{rational_from_f64, OperatorError, Rational};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OperatorSpec {
    pub vars: usize,
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub entries: Vec<EntrySpec>,
    /// Human-readable rendering; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendered: Option<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EntrySpec {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TermSpec {
    pub coeff: CoeffSpec,
    pub exponents: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CoeffSpec {
    Number(f64),
    Fraction(String),
}

impl CoeffSpec {
    fn to_rational(&self) -> Result<Rational, OperatorError> {
        match self {
            CoeffSpec::Number(x) => rational_from_f64(*x),
            CoeffSpec::Fraction(s) => Rational::from_str(s.trim())
                .map_err(|_| OperatorError::Parse(format!("invalid fraction {s:?}"))),
        }
    }

    /// Numbers when the value survives an `f64` round trip, fractions otherwise.
    fn from_rational(r: &Rational) -> CoeffSpec {
        if let Some(x) = r.to_f64() {
            if x.is_finite() && rational_from_f64(x).ok().as_ref() == Some(r) {
                return CoeffSpec::Number(x);
            }
        }
        CoeffSpec::Fraction(r.to_string())
    }
}

impl OperatorSpec {
    pub fn to_matrix(&self) -> Result<OperatorMatrix, OperatorError> {
        let mut m = OperatorMatrix::zeros(self.rows, self.cols, self.vars);
        let mut seen = vec![false; self.rows * self.cols];
        for e in &self.entries {
            if e.row >= self.rows || e.col >= self.cols {
                return Err(OperatorError::Parse(format!(
                    "entry ({}, {}) outside a {}x{} matrix",
                    e.row, e.col, self.rows, self.cols
                )));
            }
            let slot = e.row * self.cols + e.col;
            if seen[slot] {
                return Err(OperatorError::Parse(format!("duplicate entry ({}, {})", e.row, e.col)));
            }
            seen[slot] = true;
            let mut poly = OperatorPoly::zero(self.vars);
            for t in &e.terms {
                if t.exponents.len() != self.vars {
                    return Err(OperatorError::VarMismatch {
                        expected: self.vars,
                        found: t.exponents.len(),
                    });
                }
                poly.add_term(Monomial::new(t.exponents.clone()), t.coeff.to_rational()?);
            }
            m.set(e.row, e.col, poly);
        }
        Ok(m)
    }

    pub fn from_matrix(m: &OperatorMatrix) -> OperatorSpec {
        let mut entries = Vec::new();
        let mut rendered = Vec::with_capacity(m.rows());
        for i in 0..m.rows() {
            let mut row = Vec::with_capacity(m.cols());
            for j in 0..m.cols() {
                let p = m.get(i, j);
                row.push(p.to_string());
                if p.is_zero() {
                    continue;
                }
                entries.push(EntrySpec {
                    row: i,
                    col: j,
                    terms: p
                        .terms()
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(mono, c)| TermSpec {
                            coeff: CoeffSpec::from_rational(c),
                            exponents: mono.exponents().to_vec(),
                        })
                        .collect(),
                });
            }
            rendered.push(row);
        }
        OperatorSpec {
            vars: m.vars(),
            rows: m.rows(),
            cols: m.cols(),
            entries,
            rendered: Some(rendered),
        }
    }
}

/// Parses an operator matrix from JSON text, reporting line and column on syntax errors.
pub fn parse_operator_json(text: &str) -> Result<OperatorMatrix, OperatorError> {
    let spec: OperatorSpec = serde_json::from_str(text).map_err(|e| OperatorError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec.to_matrix()
}

pub fn operator_to_json(m: &OperatorMatrix) -> String {
    serde_json::to_string_pretty(&OperatorSpec::from_matrix(m)).expect("operator spec serializes")
}
