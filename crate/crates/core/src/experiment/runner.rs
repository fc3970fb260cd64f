//! Per-repetition evaluation shared by the simulated and real-data runs.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, HyperPolicy, Method};
use super::report::{rmse, FieldError, RmseReport, RmseRow};
use crate::baseline::{augment, predict_augmented, select_constraint_points, JitterPolicy};
use crate::gp::{fit_hyperparameters, Dataset, FitConfig, GpError, GpModel, KernelFamily};
use crate::kernel::{transform_kernel, SeHyperparams};
use crate::operator::OperatorMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct RowKey {
    pub method: Method,
    pub nc: usize,
}

/// Table rows in report order: methods as configured, the artificial
/// method expanded over the schedule.
pub(crate) fn row_keys(config: &ExperimentConfig) -> Vec<RowKey> {
    let mut keys = Vec::new();
    for &method in &config.methods {
        if method == Method::Artificial {
            keys.extend(config.nc_schedule.iter().map(|&nc| RowKey { method, nc }));
        } else {
            keys.push(RowKey { method, nc: 0 });
        }
    }
    keys
}

pub(crate) struct Outcome {
    pub rmse: f64,
    pub jitter: f64,
    pub seconds: f64,
    pub errors: DMatrix<f64>,
}

pub(crate) type RepOutcome = Vec<Result<Outcome, String>>;

/// Everything one repetition needs besides the randomness.
pub(crate) struct Problem<'a> {
    pub train: Dataset,
    pub queries: &'a DMatrix<f64>,
    pub truth: DMatrix<f64>,
    /// The constraint, used by the artificial method.
    pub f: &'a OperatorMatrix,
    /// Annihilator of `f`, used by the constrained method.
    pub g: Option<&'a OperatorMatrix>,
    /// Where pseudo-observations may be placed.
    pub candidates: DMatrix<f64>,
}

fn family_for(method: Method, p: &Problem) -> Result<KernelFamily, GpError> {
    Ok(match method {
        Method::Diagonal | Method::Artificial => KernelFamily::Diagonal {
            outputs: p.train.output_dim(),
            dim: p.train.input_dim(),
        },
        Method::CurlFree => KernelFamily::CurlFree3d,
        Method::Constrained => KernelFamily::Transformed {
            g: p
                .g
                .cloned()
                .ok_or_else(|| GpError::Fit("constrained method needs an annihilating operator".into()))?,
            per_column: false,
        },
    })
}

fn choose_hyper(
    family: &KernelFamily,
    data: &Dataset,
    noise_variance: f64,
    policy: &HyperPolicy,
    seed: u64,
) -> Result<(Vec<SeHyperparams>, f64), GpError> {
    match policy {
        HyperPolicy::Fixed(t) => Ok((vec![*t; family.latent_sets()], noise_variance)),
        HyperPolicy::Fit(cfg) => {
            let cfg = FitConfig { seed, ..cfg.clone() };
            let init = family.initial_guess(data);
            let fitted = fit_hyperparameters(data, family, &[init], noise_variance, &cfg)?;
            log::debug!("fitted {:?} noise {}", fitted.thetas, fitted.noise_variance);
            Ok((fitted.thetas, fitted.noise_variance))
        }
    }
}

fn finish(means: &DMatrix<f64>, truth: &DMatrix<f64>, jitter: f64, start: Option<Instant>) -> Outcome {
    Outcome {
        rmse: rmse(means, truth),
        jitter,
        seconds: start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
        errors: means - truth,
    }
}

/// Evaluates every row key on one problem instance.
pub(crate) fn run_repetition(
    rep: usize,
    problem: &Problem,
    keys: &[RowKey],
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> RepOutcome {
    let clock = || config.record_wall_time.then(Instant::now);
    let noise = config.noise_variance();
    // hyperparameters of the diagonal kernel are shared with the artificial method
    let mut diagonal: Option<Result<(SeHyperparams, f64, f64), String>> = None;
    let mut out = Vec::with_capacity(keys.len());
    for key in keys {
        let seed: u64 = rng.gen();
        let context = |e: &dyn std::fmt::Display| {
            format!("repetition {rep}, method {}, Nc {}: {e}", key.method.name(), key.nc)
        };
        let result = match key.method {
            Method::Artificial => {
                if diagonal.is_none() {
                    let start = clock();
                    diagonal = Some(
                        family_for(Method::Diagonal, problem)
                            .and_then(|fam| choose_hyper(&fam, &problem.train, noise, &config.hyper, seed))
                            .map(|(t, n)| (t[0], n, start.map_or(0.0, |s| s.elapsed().as_secs_f64())))
                            .map_err(|e| e.to_string()),
                    );
                }
                match diagonal.as_ref().expect("set above") {
                    Err(e) => Err(context(e)),
                    Ok((theta, noise, fit_secs)) => {
                        let start = clock();
                        run_artificial(problem, theta, *noise, key.nc, rng)
                            .map(|(means, jitter)| {
                                let mut o = finish(&means, &problem.truth, jitter, start);
                                o.seconds += if start.is_some() { *fit_secs } else { 0.0 };
                                o
                            })
                            .map_err(|e| context(&e))
                    }
                }
            }
            method => {
                let start = clock();
                let r = (|| {
                    let fam = family_for(method, problem)?;
                    let (thetas, n) = choose_hyper(&fam, &problem.train, noise, &config.hyper, seed)?;
                    if method == Method::Diagonal && diagonal.is_none() {
                        diagonal = Some(Ok((thetas[0], n, 0.0)));
                    }
                    let model = GpModel::fit(fam.build(&thetas)?, problem.train.clone(), n)?;
                    let pred = model.predict(problem.queries);
                    Ok::<_, GpError>((pred.means, model.jitter()))
                })();
                r.map(|(means, jitter)| finish(&means, &problem.truth, jitter, start))
                    .map_err(|e| context(&e))
            }
        };
        if let Err(e) = &result {
            log::warn!("{e}");
        }
        out.push(result);
    }
    out
}

fn run_artificial(
    p: &Problem,
    theta: &SeHyperparams,
    noise: f64,
    nc: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(DMatrix<f64>, f64), GpError> {
    let k = p.train.output_dim();
    let d = p.train.input_dim();
    let expr = transform_kernel(&OperatorMatrix::identity(k, d), theta)?;
    let points = select_constraint_points(&p.candidates, nc, rng);
    let problem = augment(&p.train, &expr, noise, p.f, &points, JitterPolicy::default())?;
    let pred = predict_augmented(&problem, p.queries);
    Ok((pred.means, problem.jitter()))
}

/// Deterministic reduction over repetitions in index order.
pub(crate) fn aggregate(
    keys: &[RowKey],
    reps: Vec<RepOutcome>,
    queries: &DMatrix<f64>,
    keep_field_errors: bool,
) -> RmseReport {
    let mut report = RmseReport::default();
    for (i, key) in keys.iter().enumerate() {
        let ok: Vec<&Outcome> = reps.iter().filter_map(|r| r[i].as_ref().ok()).collect();
        let n = ok.len();
        let mean_of = |f: &dyn Fn(&Outcome) -> f64| {
            if n == 0 {
                f64::NAN
            } else {
                ok.iter().map(|o| f(o)).sum::<f64>() / n as f64
            }
        };
        let mean = mean_of(&|o| o.rmse);
        let std = if n > 1 {
            (ok.iter().map(|o| (o.rmse - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        report.rows.push(RmseRow {
            method: key.method.name().to_string(),
            nc: key.nc,
            mean,
            std,
            n_ok: n,
            jitter: mean_of(&|o| o.jitter),
            seconds: mean_of(&|o| o.seconds),
        });
        if keep_field_errors {
            if let Some(Ok(o)) = reps.first().map(|r| &r[i]) {
                report.field_errors.push(FieldError {
                    method: key.method.name().to_string(),
                    nc: key.nc,
                    points: queries.clone(),
                    errors: o.errors.clone(),
                });
            }
        }
    }
    for r in reps {
        report.failures.extend(r.into_iter().filter_map(Result::err));
    }
    report
}
