use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{ExperimentConfig, Method};
use super::field::{grid_points, simulated_field, uniform_points};
use super::runner::{aggregate, row_keys, run_repetition, Problem};
use super::{ExperimentError, RmseReport};
use crate::exec::{map_indices, Execution};
use crate::gp::Dataset;
use crate::operator::{construct_g, make_divergence_operator, ConstructOptions};

fn field_matrix(points: &DMatrix<f64>, a: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(points.nrows(), 2);
    for i in 0..points.nrows() {
        let v = simulated_field(&[points[(i, 0)], points[(i, 1)]], a);
        m[(i, 0)] = v[0];
        m[(i, 1)] = v[1];
    }
    m
}

/// Divergence-free field reconstruction from noisy samples, predicted on a
/// regular grid; one RMSE row per method and pseudo-observation count.
pub fn run_simulated(config: &ExperimentConfig) -> Result<RmseReport, ExperimentError> {
    run_simulated_with(config, Execution::default())
}

pub(crate) fn run_simulated_with(config: &ExperimentConfig, exec: Execution) -> Result<RmseReport, ExperimentError> {
    config.validate()?;
    if config.dim() != 2 {
        return Err(ExperimentError::Config(format!(
            "the simulated field is two-dimensional, domain has {} dimensions",
            config.dim()
        )));
    }
    if config.methods.contains(&Method::CurlFree) {
        return Err(ExperimentError::Config("curl_free applies to 3-D data only".into()));
    }
    let queries = grid_points(&config.domain, config.grid);
    if let Some(&nc) = config.nc_schedule.iter().find(|&&nc| nc > queries.nrows()) {
        if config.methods.contains(&Method::Artificial) {
            return Err(ExperimentError::Config(format!(
                "Nc = {nc} exceeds the {} grid points available for pseudo-observations",
                queries.nrows()
            )));
        }
    }
    let truth = field_matrix(&queries, config.a);
    let f = make_divergence_operator(2);
    let g = if config.methods.contains(&Method::Constrained) {
        let opts = ConstructOptions {
            max_degree: config.max_degree,
            ..ConstructOptions::default()
        };
        Some(construct_g(&f, &opts)?.0)
    } else {
        None
    };
    let keys = row_keys(config);
    let reps = map_indices(exec, config.repetitions, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(r as u64);
        let x = uniform_points(&config.domain, config.n_train, &mut rng);
        let mut y = field_matrix(&x, config.a);
        for v in y.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += config.noise_std * z;
        }
        let train = Dataset::new(x, y, config.noise_std).expect("generated data is well formed");
        let problem = Problem {
            train,
            queries: &queries,
            truth: truth.clone(),
            f: &f,
            g: g.as_ref(),
            candidates: queries.clone(),
        };
        run_repetition(r, &problem, &keys, config, &mut rng)
    });
    let report = aggregate(&keys, reps, &queries, config.field_errors);
    for row in &report.rows {
        log::info!(
            "{} Nc={} rmse {:.4e} +- {:.2e} ({} ok)",
            row.method,
            row.nc,
            row.mean,
            row.std,
            row.n_ok
        );
    }
    Ok(report)
}
