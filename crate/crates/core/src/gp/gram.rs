use nalgebra::{Cholesky, DMatrix, DVector};

use super::GpError;
use crate::exec::{map_indices, Execution};
use crate::kernel::MatrixKernel;

/// Jitter escalation steps tried after a plain factorisation fails.
pub const JITTER_STEPS: u32 = 7;

/// Block Gram matrix with `K x K` blocks `K(x_a, x_b)`, plus `noise_variance`
/// on the diagonal.
pub fn assemble_gram(kernel: &dyn MatrixKernel, points: &[Vec<f64>], noise_variance: f64) -> DMatrix<f64> {
    assemble_gram_with(Execution::default(), kernel, points, noise_variance)
}

pub fn assemble_gram_with(
    exec: Execution,
    kernel: &dyn MatrixKernel,
    points: &[Vec<f64>],
    noise_variance: f64,
) -> DMatrix<f64> {
    let n = points.len();
    let k = kernel.out_dim();
    // upper-triangular block rows, computed independently
    let block_rows: Vec<Vec<DMatrix<f64>>> = map_indices(exec, n, |a| {
        (a..n).map(|b| kernel.eval(&points[a], &points[b])).collect()
    });
    let mut gram = DMatrix::zeros(n * k, n * k);
    for (a, row) in block_rows.into_iter().enumerate() {
        for (offset, block) in row.into_iter().enumerate() {
            let b = a + offset;
            gram.view_mut((a * k, b * k), (k, k)).copy_from(&block);
            if a != b {
                gram.view_mut((b * k, a * k), (k, k)).copy_from(&block.transpose());
            }
        }
    }
    for i in 0..n * k {
        gram[(i, i)] += noise_variance;
    }
    gram
}

/// Cross-covariance between training points (rows) and query points
/// (columns): block `(a, b) = K(x_a, x*_b)`.
pub fn cross_covariance(kernel: &dyn MatrixKernel, points: &[Vec<f64>], queries: &[Vec<f64>]) -> DMatrix<f64> {
    cross_covariance_with(Execution::default(), kernel, points, queries)
}

pub fn cross_covariance_with(
    exec: Execution,
    kernel: &dyn MatrixKernel,
    points: &[Vec<f64>],
    queries: &[Vec<f64>],
) -> DMatrix<f64> {
    let k = kernel.out_dim();
    let cols: Vec<Vec<DMatrix<f64>>> = map_indices(exec, queries.len(), |b| {
        points.iter().map(|p| kernel.eval(p, &queries[b])).collect()
    });
    let mut out = DMatrix::zeros(points.len() * k, queries.len() * k);
    for (b, col) in cols.into_iter().enumerate() {
        for (a, block) in col.into_iter().enumerate() {
            out.view_mut((a * k, b * k), (k, k)).copy_from(&block);
        }
    }
    out
}

/// Lower Cholesky factor together with the diagonal jitter that was needed.
#[derive(Clone, Debug)]
pub struct JitteredCholesky {
    pub l: DMatrix<f64>,
    pub jitter: f64,
}

impl JitteredCholesky {
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let y = self.l.solve_lower_triangular(b).expect("nonsingular factor");
        self.l.tr_solve_lower_triangular(&y).expect("nonsingular factor")
    }

    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.l.solve_lower_triangular(b).expect("nonsingular factor")
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// Factorises a symmetric matrix, adding `1e-12 * tr(M)/dim * 10^k` to the
/// diagonal for `k = 0..=6` when the plain factorisation fails.
pub fn cholesky_jitter(m: &DMatrix<f64>) -> Result<JitteredCholesky, GpError> {
    let dim = m.nrows();
    if dim != m.ncols() {
        return Err(GpError::Shape(format!("{}x{} matrix is not square", dim, m.ncols())));
    }
    if dim == 0 {
        return Ok(JitteredCholesky {
            l: DMatrix::zeros(0, 0),
            jitter: 0.0,
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GpError::NonFinite("Gram matrix".into()));
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(JitteredCholesky {
            l: c.unpack(),
            jitter: 0.0,
        });
    }
    let base = 1e-12 * (m.trace() / dim as f64).abs().max(f64::MIN_POSITIVE);
    let mut jitter = base;
    for _ in 0..JITTER_STEPS {
        let mut shifted = m.clone();
        for i in 0..dim {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            log::debug!("cholesky succeeded with jitter {jitter:e}");
            return Ok(JitteredCholesky { l: c.unpack(), jitter });
        }
        jitter *= 10.0;
    }
    Err(GpError::NotPositiveDefinite {
        max_jitter: jitter / 10.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{DiagonalKernel, SeHyperparams};

    #[test]
    fn identity_factor() {
        let c = cholesky_jitter(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(c.l, DMatrix::identity(4, 4));
        assert_eq!(c.jitter, 0.0);
    }

    #[test]
    fn rank_deficient_needs_jitter() {
        let v = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let m = &v * v.transpose();
        let c = cholesky_jitter(&m).unwrap();
        assert!(c.jitter > 0.0);
        let recon = &c.l * c.l.transpose();
        assert!((recon - m).amax() < 1e-6);
    }

    #[test]
    fn indefinite_fails() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(cholesky_jitter(&m), Err(GpError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn single_point_diagonal_gram() {
        let theta = SeHyperparams::new(2.0, 1.0, 0.0).unwrap();
        let k = DiagonalKernel { theta, outputs: 2, dim: 2 };
        let g = assemble_gram(&k, &[vec![0.5, 0.5]], 0.25);
        assert_eq!(g, DMatrix::identity(2, 2) * 2.25);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let theta = SeHyperparams::default();
        let k = DiagonalKernel { theta, outputs: 2, dim: 2 };
        let pts: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64 * 0.3, (i * i) as f64 * 0.1]).collect();
        let a = assemble_gram_with(Execution::Sequential, &k, &pts, 0.1);
        let b = assemble_gram_with(Execution::Parallel, &k, &pts, 0.1);
        assert_eq!(a, b);
        assert_eq!(a, a.transpose());
    }
}
