//! Finite-difference application of operator matrices to vector fields,
//! used to check constraints numerically.

use nalgebra::DVector;
use rand::Rng;

use crate::kernel::MatrixKernel;
use crate::operator::{Monomial, OperatorMatrix};

/// Central-difference stencil for the `n`-th derivative:
/// offsets (in units of `h`) and weights (before dividing by `h^n`).
fn stencil(n: u32) -> Vec<(f64, f64)> {
    if n == 0 {
        return vec![(0.0, 1.0)];
    }
    let mut binom = 1.0;
    (0..=n)
        .map(|k| {
            let w = if k % 2 == 0 { binom } else { -binom };
            let off = f64::from(n) / 2.0 - f64::from(k);
            binom = binom * f64::from(n - k) / f64::from(k + 1);
            (off, w)
        })
        .collect()
}

/// Approximates `d^m field(x)` by nested central differences with step `h`.
pub fn derivative_fd<F>(field: &F, m: &Monomial, x: &[f64], h: f64) -> DVector<f64>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let stencils: Vec<Vec<(f64, f64)>> = m.exponents().iter().map(|&e| stencil(e)).collect();
    let mut acc: Option<DVector<f64>> = None;
    let mut idx = vec![0usize; stencils.len()];
    loop {
        let mut point = x.to_vec();
        let mut weight = 1.0;
        for (d, s) in stencils.iter().enumerate() {
            let (off, w) = s[idx[d]];
            point[d] += off * h;
            weight *= w;
        }
        let v = field(&point) * weight;
        acc = Some(match acc {
            None => v,
            Some(a) => a + v,
        });
        // odometer over the tensor-product stencil
        let mut d = 0;
        while d < idx.len() {
            idx[d] += 1;
            if idx[d] < stencils[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == idx.len() {
            break;
        }
    }
    acc.expect("stencil is nonempty") / h.powi(m.degree() as i32)
}

/// `F[field](x)` with every derivative replaced by central differences.
pub fn apply_operator_fd<F>(f: &OperatorMatrix, field: &F, x: &[f64], h: f64) -> DVector<f64>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let mut out = DVector::zeros(f.rows());
    let mut cache: Vec<(Monomial, DVector<f64>)> = Vec::new();
    for i in 0..f.rows() {
        for j in 0..f.cols() {
            for (m, c) in f.get(i, j).terms_f64() {
                let pos = match cache.iter().position(|(k, _)| *k == m) {
                    Some(p) => p,
                    None => {
                        let d = derivative_fd(field, &m, x, h);
                        cache.push((m.clone(), d));
                        cache.len() - 1
                    }
                };
                out[i] += c * cache[pos].1[j];
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ConstraintCheck {
    /// Largest `|F K(., x')|` entry over all sampled pairs and columns.
    pub max_violation: f64,
    /// Largest `|K(x, x)|` entry at the sampled points.
    pub kernel_scale: f64,
    pub samples: usize,
}

impl ConstraintCheck {
    pub fn relative(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.max_violation / self.kernel_scale.max(f64::MIN_POSITIVE)
        }
    }
}

/// Applies `F` by finite differences to every column of `K(., x')` at
/// `samples` random point pairs drawn uniformly from `[lo, hi]^D`.
pub fn check_kernel_constraint<R: Rng>(
    f: &OperatorMatrix,
    kernel: &dyn MatrixKernel,
    samples: usize,
    bounds: (f64, f64),
    h: f64,
    rng: &mut R,
) -> ConstraintCheck {
    let d = kernel.input_dim();
    let k = kernel.out_dim();
    let mut max_violation: f64 = 0.0;
    let mut kernel_scale: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(bounds.0..bounds.1)).collect();
        let x2: Vec<f64> = (0..d).map(|_| rng.gen_range(bounds.0..bounds.1)).collect();
        kernel_scale = kernel_scale.max(kernel.eval(&x, &x).amax());
        for col in 0..k {
            let field = |p: &[f64]| kernel.eval(p, &x2).column(col).into_owned();
            let v = apply_operator_fd(f, &field, &x, h);
            max_violation = max_violation.max(v.amax());
        }
    }
    ConstraintCheck {
        max_violation,
        kernel_scale,
        samples,
    }
}
