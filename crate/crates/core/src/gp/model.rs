use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::data::{rows_of, unstack_rows, Dataset};
use super::gram::{assemble_gram, cross_covariance, cholesky_jitter, JitteredCholesky};
use super::GpError;
use crate::kernel::MatrixKernel;

/// Posterior means and marginal variances at `M` query points.
#[derive(Clone, Debug)]
pub struct PredictionResult {
    /// `M x K`
    pub means: DMatrix<f64>,
    /// `M x K`, clamped at zero.
    pub marginal_variances: DMatrix<f64>,
    /// Full `MK x MK` posterior covariance when requested.
    pub covariance: Option<DMatrix<f64>>,
}

/// Below this, negative variances are treated as round-off and clamped.
pub const VARIANCE_CLAMP: f64 = -1e-10;

/// Factored joint covariance of observations and the weights `alpha = C^-1 y`.
#[derive(Clone, Debug)]
pub struct Conditioned {
    pub chol: JitteredCholesky,
    pub alpha: DVector<f64>,
    pub targets: DVector<f64>,
}

impl Conditioned {
    pub fn new(cov: &DMatrix<f64>, targets: DVector<f64>) -> Result<Self, GpError> {
        let chol = cholesky_jitter(cov)?;
        let alpha = chol.solve(&targets);
        Ok(Conditioned { chol, alpha, targets })
    }

    /// `-1/2 y^T C^-1 y - 1/2 log|C| - n/2 log 2 pi`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.targets.len() as f64;
        -0.5 * self.targets.dot(&self.alpha) - 0.5 * self.chol.log_det() - 0.5 * n * (2.0 * PI).ln()
    }

    /// Gaussian conditioning given the cross-covariance (observations x
    /// queries) and the prior covariance blocks of the queries.
    ///
    /// `prior_blocks[b]` is the `K x K` prior covariance at query `b`; with
    /// `full_prior` the full query covariance is used for the optional full
    /// posterior covariance.
    pub fn predict(
        &self,
        cross: &DMatrix<f64>,
        prior_blocks: &[DMatrix<f64>],
        out_dim: usize,
        full_prior: Option<&DMatrix<f64>>,
    ) -> PredictionResult {
        let mean = cross.transpose() * &self.alpha;
        let v = self.chol.solve_lower(cross);
        let m = prior_blocks.len();
        let mut var = DMatrix::zeros(m, out_dim);
        let mut clamped = 0usize;
        for b in 0..m {
            for i in 0..out_dim {
                let col = b * out_dim + i;
                let explained: f64 = v.column(col).iter().map(|x| x * x).sum();
                let mut s = prior_blocks[b][(i, i)] - explained;
                if s < 0.0 {
                    if s < VARIANCE_CLAMP {
                        clamped += 1;
                    }
                    s = 0.0;
                }
                var[(b, i)] = s;
            }
        }
        if clamped > 0 {
            log::warn!("clamped {clamped} negative posterior variances to zero");
        }
        let covariance = full_prior.map(|p| p - v.transpose() * &v);
        PredictionResult {
            means: unstack_rows(&mean, out_dim),
            marginal_variances: var,
            covariance,
        }
    }
}

/// A GP conditioned on training data with fixed hyperparameters.
#[derive(Clone)]
pub struct GpModel {
    kernel: Arc<dyn MatrixKernel>,
    noise_variance: f64,
    training: Dataset,
    points: Vec<Vec<f64>>,
    conditioned: Conditioned,
}

impl std::fmt::Debug for GpModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GpModel")
            .field("noise_variance", &self.noise_variance)
            .field("n_train", &self.training.len())
            .field("jitter", &self.conditioned.chol.jitter)
            .finish()
    }
}

impl GpModel {
    pub fn fit(kernel: Arc<dyn MatrixKernel>, training: Dataset, noise_variance: f64) -> Result<Self, GpError> {
        if kernel.input_dim() != training.input_dim() || kernel.out_dim() != training.output_dim() {
            return Err(GpError::Shape(format!(
                "kernel maps R^{} to R^{} but data is R^{} -> R^{}",
                kernel.input_dim(),
                kernel.out_dim(),
                training.input_dim(),
                training.output_dim()
            )));
        }
        let points = rows_of(&training.inputs);
        let gram = assemble_gram(kernel.as_ref(), &points, noise_variance);
        let conditioned = Conditioned::new(&gram, training.stacked_outputs())?;
        Ok(GpModel {
            kernel,
            noise_variance,
            training,
            points,
            conditioned,
        })
    }

    pub fn kernel(&self) -> &Arc<dyn MatrixKernel> {
        &self.kernel
    }

    pub fn training(&self) -> &Dataset {
        &self.training
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn jitter(&self) -> f64 {
        self.conditioned.chol.jitter
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.conditioned.chol.l
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.conditioned.alpha
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.conditioned.log_marginal_likelihood()
    }

    pub fn predict(&self, queries: &DMatrix<f64>) -> PredictionResult {
        self.predict_impl(queries, false)
    }

    pub fn predict_with_covariance(&self, queries: &DMatrix<f64>) -> PredictionResult {
        self.predict_impl(queries, true)
    }

    fn predict_impl(&self, queries: &DMatrix<f64>, full: bool) -> PredictionResult {
        let q = rows_of(queries);
        let k = self.kernel.as_ref();
        let cross = cross_covariance(k, &self.points, &q);
        let prior_blocks: Vec<DMatrix<f64>> = q.iter().map(|x| k.eval(x, x)).collect();
        let full_prior = full.then(|| assemble_gram(k, &q, 0.0));
        self.conditioned
            .predict(&cross, &prior_blocks, k.out_dim(), full_prior.as_ref())
    }
}

pub fn log_marginal_likelihood(model: &GpModel) -> f64 {
    model.log_marginal_likelihood()
}

pub fn predict(model: &GpModel, queries: &DMatrix<f64>) -> PredictionResult {
    model.predict(queries)
}
