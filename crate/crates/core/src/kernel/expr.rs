use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::Zero;

use super::se::{DerivativeKernel, DerivativeMultiIndex, SeHyperparams, SquaredExponential, MAX_DERIVATIVE_ORDER};
use super::KernelError;
use crate::operator::{rational_to_f64, OperatorMatrix, OperatorPoly, Rational};

/// Which kernel argument an operator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// The first argument `x`; composes from the left.
    Left,
    /// The second argument `x'`; composes from the right (transposed).
    Right,
}

type Terms = BTreeMap<DerivativeMultiIndex, Rational>;

/// A matrix of linear combinations of mixed partial derivatives of a scalar
/// base kernel, e.g. `G_x k(x, x') G_x'^T`.
#[derive(Clone, Debug)]
pub struct MatrixKernelExpr<B = SquaredExponential> {
    rows: usize,
    cols: usize,
    dim: usize,
    base: B,
    entries: Vec<Terms>,
    numeric: Vec<Vec<(DerivativeMultiIndex, f64)>>,
}

fn add_term(terms: &mut Terms, idx: DerivativeMultiIndex, c: Rational) {
    if c.is_zero() {
        return;
    }
    let slot = terms.entry(idx.clone()).or_insert_with(Rational::zero);
    *slot += c;
    if slot.is_zero() {
        terms.remove(&idx);
    }
}

fn check_order(terms: &Terms) -> Result<(), KernelError> {
    match terms.keys().map(DerivativeMultiIndex::order).max() {
        Some(order) if order > MAX_DERIVATIVE_ORDER => Err(KernelError::OrderTooHigh {
            order,
            max: MAX_DERIVATIVE_ORDER,
        }),
        _ => Ok(()),
    }
}

impl<B: DerivativeKernel + Clone> MatrixKernelExpr<B> {
    fn from_entries(rows: usize, cols: usize, dim: usize, base: B, entries: Vec<Terms>) -> Result<Self, KernelError> {
        for t in &entries {
            check_order(t)?;
        }
        let numeric = entries
            .iter()
            .map(|t| t.iter().map(|(i, c)| (i.clone(), rational_to_f64(c))).collect())
            .collect();
        Ok(MatrixKernelExpr {
            rows,
            cols,
            dim,
            base,
            entries,
            numeric,
        })
    }

    /// The scalar base kernel as a 1x1 expression.
    pub fn scalar(dim: usize, base: B) -> Self {
        let mut t = Terms::new();
        t.insert(DerivativeMultiIndex::zero(dim), Rational::from_integer(1.into()));
        Self::from_entries(1, 1, dim, base, vec![t]).expect("order zero")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &B {
        &self.base
    }

    /// Same symbolic structure over a different base kernel.
    pub fn with_base(&self, base: B) -> Self {
        MatrixKernelExpr {
            base,
            ..self.clone()
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> impl Iterator<Item = (&DerivativeMultiIndex, &Rational)> {
        self.entries[i * self.cols + j].iter()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(BTreeMap::is_empty)
    }

    pub fn max_order(&self) -> u32 {
        self.entries
            .iter()
            .flat_map(|t| t.keys().map(DerivativeMultiIndex::order))
            .max()
            .unwrap_or(0)
    }

    /// Whether entry `(i,j)` mirrors entry `(j,i)` with the arguments swapped,
    /// which makes `K(x, x') = K(x', x)^T`.
    pub fn is_hermitian(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let a = &self.entries[i * self.cols + j];
                let b = &self.entries[j * self.cols + i];
                a.len() == b.len() && a.iter().all(|(idx, c)| b.get(&idx.swapped()) == Some(c))
            })
        })
    }

    pub fn eval(&self, x: &[f64], x2: &[f64]) -> DMatrix<f64> {
        eval_matrix_kernel(self, x, x2)
    }

    pub fn eval_entry(&self, i: usize, j: usize, x: &[f64], x2: &[f64]) -> f64 {
        self.numeric[i * self.cols + j]
            .iter()
            .map(|(idx, c)| c * self.base.derivative(idx, x, x2).expect("order checked at construction"))
            .sum()
    }
}

/// Evaluates every entry; derivative orders were validated when the expression was built.
pub fn eval_matrix_kernel<B: DerivativeKernel + Clone>(expr: &MatrixKernelExpr<B>, x: &[f64], x2: &[f64]) -> DMatrix<f64> {
    assert_eq!(x.len(), expr.dim, "point dimension");
    assert_eq!(x2.len(), expr.dim, "point dimension");
    DMatrix::from_fn(expr.rows, expr.cols, |i, j| expr.eval_entry(i, j, x, x2))
}

/// `K(x, x') = G_x k(x, x') G_x'^T` for a squared-exponential base kernel.
pub fn transform_kernel(g: &OperatorMatrix, theta: &SeHyperparams) -> Result<MatrixKernelExpr, KernelError> {
    transform_kernel_with(g, SquaredExponential::new(*theta))
}

pub fn transform_kernel_with<B: DerivativeKernel + Clone>(
    g: &OperatorMatrix,
    base: B,
) -> Result<MatrixKernelExpr<B>, KernelError> {
    transform_columns(g, 0..g.cols(), base)
}

/// One expression per column of `G`, so each latent component can carry its
/// own hyperparameters. Summing them gives [`transform_kernel`].
pub fn transform_kernel_columns(
    g: &OperatorMatrix,
    thetas: &[SeHyperparams],
) -> Result<Vec<MatrixKernelExpr>, KernelError> {
    if thetas.len() != g.cols() {
        return Err(KernelError::Shape(format!(
            "{} hyperparameter sets for {} latent components",
            thetas.len(),
            g.cols()
        )));
    }
    thetas
        .iter()
        .enumerate()
        .map(|(c, theta)| transform_columns(g, c..c + 1, SquaredExponential::new(*theta)))
        .collect()
}

fn transform_columns<B: DerivativeKernel + Clone>(
    g: &OperatorMatrix,
    columns: std::ops::Range<usize>,
    base: B,
) -> Result<MatrixKernelExpr<B>, KernelError> {
    let n = g.rows();
    let dim = g.vars();
    let mut entries = vec![Terms::new(); n * n];
    for i in 0..n {
        for j in 0..n {
            let slot = &mut entries[i * n + j];
            for c in columns.clone() {
                for (mi, ci) in g.get(i, c).terms() {
                    for (mj, cj) in g.get(j, c).terms() {
                        let idx = DerivativeMultiIndex::new(mi.exponents().to_vec(), mj.exponents().to_vec());
                        add_term(slot, idx, ci * cj);
                    }
                }
            }
        }
    }
    MatrixKernelExpr::from_entries(n, n, dim, base, entries)
}

/// Applies `F` to one argument of a kernel expression.
///
/// `Left` gives `F_x K` (`rows(F) x cols(K)`), `Right` gives `K F_x'^T`
/// (`rows(K) x rows(F)`).
pub fn apply_operator_to_expr<B: DerivativeKernel + Clone>(
    f: &OperatorMatrix,
    expr: &MatrixKernelExpr<B>,
    side: Side,
) -> Result<MatrixKernelExpr<B>, KernelError> {
    if f.vars() != expr.dim {
        return Err(KernelError::Dimension {
            expected: expr.dim,
            found: f.vars(),
        });
    }
    let inner = match side {
        Side::Left => expr.rows,
        Side::Right => expr.cols,
    };
    if f.cols() != inner {
        return Err(KernelError::Shape(format!(
            "operator has {} columns but the kernel side has {inner}",
            f.cols()
        )));
    }
    let (rows, cols) = match side {
        Side::Left => (f.rows(), expr.cols),
        Side::Right => (expr.rows, f.rows()),
    };
    let mut entries = vec![Terms::new(); rows * cols];
    for a in 0..rows {
        for b in 0..cols {
            let slot = &mut entries[a * cols + b];
            for k in 0..inner {
                let (poly, src): (&OperatorPoly, &Terms) = match side {
                    Side::Left => (f.get(a, k), &expr.entries[k * expr.cols + b]),
                    Side::Right => (f.get(b, k), &expr.entries[a * expr.cols + k]),
                };
                for (m, cf) in poly.terms() {
                    for (idx, ce) in src {
                        let shifted = match side {
                            Side::Left => idx.add_alpha(m.exponents()),
                            Side::Right => idx.add_beta(m.exponents()),
                        };
                        add_term(slot, shifted, cf * ce);
                    }
                }
            }
        }
    }
    MatrixKernelExpr::from_entries(rows, cols, expr.dim, expr.base.clone(), entries)
}
