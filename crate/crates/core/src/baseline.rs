//! Constraint enforcement through noise-free pseudo-observations
//! `F f(x~) = 0` at chosen points, the comparison method for
//! transformed kernels. Constraints hold only at those points.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{map_indices, Execution};
use crate::gp::{assemble_gram, rows_of, Conditioned, Dataset, GpError, PredictionResult};
use crate::kernel::{apply_operator_to_expr, MatrixKernelExpr, Side};
use crate::operator::OperatorMatrix;

/// Regularisation of the pseudo-observation block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JitterPolicy {
    /// Variance added to constraint observations; zero makes them exact.
    pub constraint_variance: f64,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        JitterPolicy {
            constraint_variance: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Site {
    Value(usize),
    Constraint(usize),
}

/// A GP conditioned jointly on data and on `F f = 0` at constraint points.
#[derive(Clone, Debug)]
pub struct AugmentedProblem {
    data: Dataset,
    constraint_points: Vec<Vec<f64>>,
    f: OperatorMatrix,
    kernel: MatrixKernelExpr,
    /// `K F'^T`: covariance between `f(x)` and `F f(x')`.
    k_ft: MatrixKernelExpr,
    /// `F K`: covariance between `F f(x)` and `f(x')`.
    f_k: MatrixKernelExpr,
    /// `F K F'^T`
    f_k_ft: MatrixKernelExpr,
    noise_variance: f64,
    // set once the joint Gram has been factored
    conditioned: Option<Conditioned>,
}

impl AugmentedProblem {
    pub fn constraint_points(&self) -> &[Vec<f64>] {
        &self.constraint_points
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.f
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    fn conditioned(&self) -> &Conditioned {
        self.conditioned.as_ref().expect("factored in augment")
    }

    pub fn jitter(&self) -> f64 {
        self.conditioned().chol.jitter
    }

    /// Dimension of the joint Gram matrix: `N K + Nc rows(F)`.
    pub fn joint_dim(&self) -> usize {
        self.data.len() * self.kernel.rows() + self.constraint_points.len() * self.f.rows()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.conditioned().log_marginal_likelihood()
    }

    fn sites(&self) -> Vec<Site> {
        (0..self.data.len())
            .map(Site::Value)
            .chain((0..self.constraint_points.len()).map(Site::Constraint))
            .collect()
    }

    fn site_point(&self, s: Site) -> Vec<f64> {
        match s {
            Site::Value(a) => self.data.point(a),
            Site::Constraint(c) => self.constraint_points[c].clone(),
        }
    }

    fn site_len(&self, s: Site) -> usize {
        match s {
            Site::Value(_) => self.kernel.rows(),
            Site::Constraint(_) => self.f.rows(),
        }
    }

    fn block(&self, a: Site, b: Site) -> DMatrix<f64> {
        let (x, y) = (self.site_point(a), self.site_point(b));
        match (a, b) {
            (Site::Value(_), Site::Value(_)) => self.kernel.eval(&x, &y),
            (Site::Value(_), Site::Constraint(_)) => self.k_ft.eval(&x, &y),
            (Site::Constraint(_), Site::Value(_)) => self.f_k.eval(&x, &y),
            (Site::Constraint(_), Site::Constraint(_)) => self.f_k_ft.eval(&x, &y),
        }
    }
}

/// Builds the joint model of observations and constraint pseudo-observations.
///
/// `kernel` is the (unconstrained) prior covariance of `f`, e.g. the
/// diagonal kernel expressed as an identity transform.
pub fn augment(
    data: &Dataset,
    kernel: &MatrixKernelExpr,
    noise_variance: f64,
    f: &OperatorMatrix,
    points: &[Vec<f64>],
    policy: JitterPolicy,
) -> Result<AugmentedProblem, GpError> {
    if kernel.rows() != kernel.cols() || f.cols() != kernel.rows() {
        return Err(GpError::Shape(format!(
            "operator with {} columns cannot act on a {}x{} kernel",
            f.cols(),
            kernel.rows(),
            kernel.cols()
        )));
    }
    if data.output_dim() != kernel.rows() || data.input_dim() != kernel.input_dim() {
        return Err(GpError::Shape("dataset does not match kernel dimensions".into()));
    }
    if points.iter().any(|p| p.len() != kernel.input_dim()) {
        return Err(GpError::Shape("constraint point dimension".into()));
    }
    let k_ft = apply_operator_to_expr(f, kernel, Side::Right)?;
    let f_k = apply_operator_to_expr(f, kernel, Side::Left)?;
    let f_k_ft = apply_operator_to_expr(f, &f_k, Side::Right)?;

    let mut problem = AugmentedProblem {
        data: data.clone(),
        constraint_points: points.to_vec(),
        f: f.clone(),
        kernel: kernel.clone(),
        k_ft,
        f_k,
        f_k_ft,
        noise_variance,
        conditioned: None,
    };

    let sites = problem.sites();
    let offsets: Vec<usize> = sites
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += problem.site_len(*s);
            Some(o)
        })
        .collect();
    let dim = problem.joint_dim();
    let rows: Vec<Vec<DMatrix<f64>>> = map_indices(Execution::default(), sites.len(), |i| {
        (i..sites.len()).map(|j| problem.block(sites[i], sites[j])).collect()
    });
    let mut cov = DMatrix::zeros(dim, dim);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, block) in row.into_iter().enumerate() {
            let j = i + off;
            let (oi, oj) = (offsets[i], offsets[j]);
            cov.view_mut((oi, oj), block.shape()).copy_from(&block);
            if i != j {
                cov.view_mut((oj, oi), (block.ncols(), block.nrows()))
                    .copy_from(&block.transpose());
            }
        }
    }
    let n_data = data.len() * kernel.rows();
    for d in 0..dim {
        cov[(d, d)] += if d < n_data {
            noise_variance
        } else {
            policy.constraint_variance
        };
    }
    let mut targets = DVector::zeros(dim);
    targets.rows_mut(0, n_data).copy_from(&data.stacked_outputs());
    problem.conditioned = Some(Conditioned::new(&cov, targets)?);
    if problem.jitter() > 0.0 {
        log::info!(
            "augmented Gram ({dim}x{dim}, {} constraint points) needed jitter {:e}",
            points.len(),
            problem.jitter()
        );
    }
    Ok(problem)
}

/// Posterior of `f` at `queries` under the joint model.
pub fn predict_augmented(problem: &AugmentedProblem, queries: &DMatrix<f64>) -> PredictionResult {
    let q = rows_of(queries);
    let k = problem.kernel.rows();
    let sites = problem.sites();
    let cols: Vec<Vec<DMatrix<f64>>> = map_indices(Execution::default(), q.len(), |b| {
        sites
            .iter()
            .map(|&s| {
                let x = problem.site_point(s);
                match s {
                    Site::Value(_) => problem.kernel.eval(&x, &q[b]),
                    Site::Constraint(_) => problem.f_k.eval(&x, &q[b]),
                }
            })
            .collect()
    });
    let mut cross = DMatrix::zeros(problem.joint_dim(), q.len() * k);
    for (b, col) in cols.into_iter().enumerate() {
        let mut offset = 0;
        for block in col {
            cross.view_mut((offset, b * k), block.shape()).copy_from(&block);
            offset += block.nrows();
        }
    }
    let prior: Vec<DMatrix<f64>> = q.iter().map(|x| problem.kernel.eval(x, x)).collect();
    problem.conditioned().predict(&cross, &prior, k, None)
}

/// Full prior covariance of the query points, for callers that need it.
pub fn prior_covariance(problem: &AugmentedProblem, queries: &DMatrix<f64>) -> DMatrix<f64> {
    assemble_gram(&problem.kernel, &rows_of(queries), 0.0)
}

/// `count` distinct rows of `candidates` chosen uniformly without replacement,
/// in their original order.
pub fn select_constraint_points<R: Rng>(candidates: &DMatrix<f64>, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = candidates.nrows();
    if count >= n {
        return rows_of(candidates);
    }
    let mut idx = sample(rng, n, count).into_vec();
    idx.sort_unstable();
    idx.into_iter()
        .map(|i| candidates.row(i).iter().copied().collect())
        .collect()
}
