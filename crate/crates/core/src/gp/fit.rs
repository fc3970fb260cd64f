use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::model::GpModel;
use super::optimize::{nelder_mead, NelderMeadOptions};
use super::GpError;
use crate::kernel::{
    transform_kernel, transform_kernel_columns, CurlFreeKernel, DiagonalKernel, MatrixKernel, SeHyperparams,
    SumKernel,
};
use crate::operator::OperatorMatrix;

// log-parameters outside this box are rejected by the objective
const LOG_BOUND: f64 = 12.0;

/// A kernel structure whose SE hyperparameters are free.
#[derive(Clone, Debug)]
pub enum KernelFamily {
    Diagonal { outputs: usize, dim: usize },
    CurlFree3d,
    Transformed { g: OperatorMatrix, per_column: bool },
}

impl KernelFamily {
    /// Number of independent `(sf2, l)` pairs.
    pub fn latent_sets(&self) -> usize {
        match self {
            KernelFamily::Transformed { g, per_column: true } => g.cols(),
            _ => 1,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            KernelFamily::Diagonal { dim, .. } => *dim,
            KernelFamily::CurlFree3d => 3,
            KernelFamily::Transformed { g, .. } => g.vars(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            KernelFamily::Diagonal { outputs, .. } => *outputs,
            KernelFamily::CurlFree3d => 3,
            KernelFamily::Transformed { g, .. } => g.rows(),
        }
    }

    /// Derivative order the kernel puts on each argument; scales the prior variance.
    fn operator_order(&self) -> u32 {
        match self {
            KernelFamily::Diagonal { .. } | KernelFamily::CurlFree3d => 0,
            KernelFamily::Transformed { g, .. } => g.max_degree().unwrap_or(0),
        }
    }

    pub fn build(&self, thetas: &[SeHyperparams]) -> Result<Arc<dyn MatrixKernel>, GpError> {
        if thetas.len() != self.latent_sets() {
            return Err(GpError::Shape(format!(
                "{} hyperparameter sets for a family with {}",
                thetas.len(),
                self.latent_sets()
            )));
        }
        for t in thetas {
            t.validate()?;
        }
        Ok(match self {
            KernelFamily::Diagonal { outputs, dim } => Arc::new(DiagonalKernel {
                theta: thetas[0],
                outputs: *outputs,
                dim: *dim,
            }),
            KernelFamily::CurlFree3d => Arc::new(CurlFreeKernel { theta: thetas[0] }),
            KernelFamily::Transformed { g, per_column: false } => Arc::new(transform_kernel(g, &thetas[0])?),
            KernelFamily::Transformed { g, per_column: true } => Arc::new(SumKernel(
                transform_kernel_columns(g, thetas)?
                    .into_iter()
                    .map(|e| Box::new(e) as Box<dyn MatrixKernel>)
                    .collect(),
            )),
        })
    }

    /// Data-driven starting point: length scale a quarter of the mean input
    /// range, signal variance matched to the output variance.
    pub fn initial_guess(&self, data: &Dataset) -> SeHyperparams {
        let d = data.input_dim().max(1);
        let range: f64 = (0..data.input_dim())
            .map(|c| {
                let col = data.inputs.column(c);
                col.max() - col.min()
            })
            .sum::<f64>()
            / d as f64;
        let l = if range > 0.0 { 0.25 * range } else { 1.0 };
        let n = data.outputs.len().max(1) as f64;
        let mean = data.outputs.sum() / n;
        let var = data.outputs.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
        let var = if var > 0.0 { var } else { 1.0 };
        let q = self.operator_order() as i32;
        SeHyperparams {
            signal_variance: var * l.powi(2 * q),
            length_scale: l,
            noise_variance: data.noise_std * data.noise_std,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub restarts: usize,
    pub learn_noise: bool,
    /// Standard deviation of the log-space perturbation for restarts after the first.
    pub restart_spread: f64,
    /// Fit on a random subset of at most this many training points.
    pub max_points: Option<usize>,
    pub seed: u64,
    pub optimizer: NelderMeadOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 3,
            learn_noise: false,
            restart_spread: 1.0,
            max_points: None,
            seed: 0,
            optimizer: NelderMeadOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FittedHyperparams {
    pub thetas: Vec<SeHyperparams>,
    pub noise_variance: f64,
    pub log_marginal_likelihood: f64,
    pub evaluations: usize,
    pub successful_restarts: usize,
}

impl FittedHyperparams {
    pub fn theta(&self) -> SeHyperparams {
        SeHyperparams {
            noise_variance: self.noise_variance,
            ..self.thetas[0]
        }
    }
}

fn encode(thetas: &[SeHyperparams], noise_variance: f64, learn_noise: bool) -> Vec<f64> {
    let mut x: Vec<f64> = thetas
        .iter()
        .flat_map(|t| [0.5 * t.signal_variance.ln(), t.length_scale.ln()])
        .collect();
    if learn_noise {
        x.push(0.5 * noise_variance.max(1e-300).ln());
    }
    x
}

fn decode(x: &[f64], sets: usize, fixed_noise: f64, learn_noise: bool) -> (Vec<SeHyperparams>, f64) {
    let noise = if learn_noise { (2.0 * x[2 * sets]).exp() } else { fixed_noise };
    let thetas = (0..sets)
        .map(|s| SeHyperparams {
            signal_variance: (2.0 * x[2 * s]).exp(),
            length_scale: x[2 * s + 1].exp(),
            noise_variance: noise,
        })
        .collect();
    (thetas, noise)
}

/// Negative log marginal likelihood; numerical failures map to `+inf`.
pub fn negative_lml(family: &KernelFamily, data: &Dataset, thetas: &[SeHyperparams], noise_variance: f64) -> f64 {
    let Ok(kernel) = family.build(thetas) else {
        return f64::INFINITY;
    };
    match GpModel::fit(kernel, data.clone(), noise_variance) {
        Ok(m) => {
            let v = -m.log_marginal_likelihood();
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Maximises the log marginal likelihood over log-hyperparameters with
/// Nelder-Mead and `config.restarts` starts. Deterministic given `config.seed`.
///
/// `init` holds either one set (replicated across latent components) or one per component.
pub fn fit_hyperparameters(
    data: &Dataset,
    family: &KernelFamily,
    init: &[SeHyperparams],
    noise_variance: f64,
    config: &FitConfig,
) -> Result<FittedHyperparams, GpError> {
    let sets = family.latent_sets();
    let init: Vec<SeHyperparams> = match init.len() {
        1 => vec![init[0]; sets],
        n if n == sets => init.to_vec(),
        n => {
            return Err(GpError::Shape(format!(
                "{n} initial hyperparameter sets for a family with {sets}"
            )))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let fit_data = match config.max_points {
        Some(m) if m < data.len() => {
            let mut idx = sample(&mut rng, data.len(), m).into_vec();
            idx.sort_unstable();
            data.select(&idx)
        }
        _ => data.clone(),
    };
    let x0 = encode(&init, noise_variance, config.learn_noise);
    let spread = Normal::new(0.0, config.restart_spread.max(0.0)).map_err(|e| GpError::Fit(e.to_string()))?;
    let objective = |x: &[f64]| {
        if x.iter().any(|v| v.abs() > LOG_BOUND) {
            return f64::INFINITY;
        }
        let (thetas, noise) = decode(x, sets, noise_variance, config.learn_noise);
        negative_lml(family, &fit_data, &thetas, noise)
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut evaluations = 0;
    let mut ok = 0;
    for r in 0..config.restarts.max(1) {
        let start: Vec<f64> = if r == 0 {
            x0.clone()
        } else {
            x0.iter().map(|v| v + spread.sample(&mut rng)).collect()
        };
        let m = nelder_mead(objective, &start, &config.optimizer);
        evaluations += m.evaluations;
        if !m.value.is_finite() {
            log::debug!("restart {r} found no finite objective value");
            continue;
        }
        ok += 1;
        if best.as_ref().is_none_or(|(_, v)| m.value < *v) {
            best = Some((m.x, m.value));
        }
    }
    let (x, value) = best.ok_or_else(|| GpError::Fit("all optimizer restarts failed numerically".into()))?;
    let (thetas, noise) = decode(&x, sets, noise_variance, config.learn_noise);
    Ok(FittedHyperparams {
        thetas,
        noise_variance: noise,
        log_marginal_likelihood: -value,
        evaluations,
        successful_restarts: ok,
    })
}
