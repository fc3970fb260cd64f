use std::fmt;

use num_traits::One;

use super::monomial::Monomial;
use super::poly::OperatorPoly;
use super::{OperatorError, Rational};

/// An `m x n` matrix of scalar differential operators over `p` variables.
///
/// Entries are stored row-major. The all-zero matrix is represented by
/// empty polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorMatrix {
    rows: usize,
    cols: usize,
    vars: usize,
    entries: Vec<OperatorPoly>,
}

impl OperatorMatrix {
    pub fn zeros(rows: usize, cols: usize, vars: usize) -> Self {
        OperatorMatrix {
            rows,
            cols,
            vars,
            entries: vec![OperatorPoly::zero(vars); rows * cols],
        }
    }

    /// Degree-0 identity: the operator leaving every component unchanged.
    pub fn identity(n: usize, vars: usize) -> Self {
        let mut m = Self::zeros(n, n, vars);
        for i in 0..n {
            m.set(i, i, OperatorPoly::constant(vars, Rational::one()));
        }
        m
    }

    pub fn from_rows(vars: usize, rows: Vec<Vec<OperatorPoly>>) -> Result<Self, OperatorError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(m * n);
        for row in rows {
            if row.len() != n {
                return Err(OperatorError::Shape(format!(
                    "ragged rows: expected {n} columns, found {}",
                    row.len()
                )));
            }
            for p in row {
                if p.vars() != vars {
                    return Err(OperatorError::VarMismatch {
                        expected: vars,
                        found: p.vars(),
                    });
                }
                entries.push(p);
            }
        }
        Ok(OperatorMatrix {
            rows: m,
            cols: n,
            vars,
            entries,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn get(&self, i: usize, j: usize) -> &OperatorPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: OperatorPoly) {
        assert_eq!(p.vars(), self.vars, "variable count mismatch");
        self.entries[i * self.cols + j] = p;
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(OperatorPoly::is_zero)
    }

    /// Highest total derivative order among all entries, `None` for the zero matrix.
    pub fn max_degree(&self) -> Option<u32> {
        self.entries.iter().filter_map(OperatorPoly::max_degree).max()
    }

    /// Monomials appearing anywhere in row `i`.
    pub fn row_support(&self, i: usize) -> Vec<Monomial> {
        let mut out: Vec<Monomial> = (0..self.cols)
            .flat_map(|j| self.get(i, j).terms().map(|(m, _)| m.clone()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn column(&self, j: usize) -> Vec<OperatorPoly> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    /// Operator product `F G`, entry `(i,k) = sum_j F_ij G_jk`.
    pub fn mul(&self, other: &OperatorMatrix) -> Result<OperatorMatrix, OperatorError> {
        symbolic_product(self, other)
    }
}

pub fn symbolic_product(f: &OperatorMatrix, g: &OperatorMatrix) -> Result<OperatorMatrix, OperatorError> {
    if f.vars != g.vars {
        return Err(OperatorError::VarMismatch {
            expected: f.vars,
            found: g.vars,
        });
    }
    if f.cols != g.rows {
        return Err(OperatorError::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            f.rows, f.cols, g.rows, g.cols
        )));
    }
    let mut out = OperatorMatrix::zeros(f.rows, g.cols, f.vars);
    for i in 0..f.rows {
        for k in 0..g.cols {
            let mut acc = OperatorPoly::zero(f.vars);
            for j in 0..f.cols {
                acc = acc.add(&f.get(i, j).mul(g.get(j, k)));
            }
            out.set(i, k, acc);
        }
    }
    Ok(out)
}

/// Divergence `[d/dx1, ..., d/dxD]` as a `1 x D` operator matrix.
pub fn make_divergence_operator(dim: usize) -> OperatorMatrix {
    assert!(dim >= 1, "divergence needs at least one dimension");
    let mut f = OperatorMatrix::zeros(1, dim, dim);
    for j in 0..dim {
        f.set(0, j, OperatorPoly::derivative(dim, j));
    }
    f
}

/// The 3x3 skew operator whose null space is the curl-free fields.
pub fn make_curl_operator_3d() -> OperatorMatrix {
    let d = |k: usize| OperatorPoly::derivative(3, k);
    let neg = |k: usize| OperatorPoly::derivative(3, k).scale(&-Rational::one());
    let z = || OperatorPoly::zero(3);
    OperatorMatrix::from_rows(
        3,
        vec![
            vec![z(), d(2), neg(1)],
            vec![neg(2), z(), d(0)],
            vec![d(1), neg(0), z()],
        ],
    )
    .expect("well-formed curl operator")
}

/// Gradient column `[d/dx1, ..., d/dxD]^T`.
pub fn make_gradient_operator(dim: usize) -> OperatorMatrix {
    let mut g = OperatorMatrix::zeros(dim, 1, dim);
    for j in 0..dim {
        g.set(j, 0, OperatorPoly::derivative(dim, j));
    }
    g
}

impl fmt::Display for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        let width = cells.iter().map(String::len).max().unwrap_or(1);
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{:>width$}", cells[i * self.cols + j])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}
