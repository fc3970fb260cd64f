use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Method};
use super::runner::{aggregate, row_keys, run_repetition, Problem};
use super::{ExperimentError, RmseReport};
use crate::exec::{map_indices, Execution};
use crate::gp::{select_rows, Dataset};
use crate::operator::{construct_g, make_curl_operator_3d, ConstructOptions};

const INPUT_COLS: [&str; 3] = ["x1", "x2", "x3"];
const OUTPUT_COLS: [&str; 3] = ["b1", "b2", "b3"];

/// Reads a numeric CSV with a header row: column names and an `n x c` matrix.
pub fn read_table(path: &Path) -> Result<(Vec<String>, DMatrix<f64>), ExperimentError> {
    if !path.is_file() {
        return Err(ExperimentError::Data(format!("{}: no such file", path.display())));
    }
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(ExperimentError::Data(format!(
                "{} line {line}: expected {} fields, found {}",
                path.display(),
                header.len(),
                rec.len()
            )));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                ExperimentError::Data(format!(
                    "{} line {line}: column {} is not a number: {field:?}",
                    path.display(),
                    header[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(ExperimentError::Data(format!(
                    "{} line {line}: column {} is not finite",
                    path.display(),
                    header[c]
                )));
            }
            values.push(v);
        }
    }
    let cols = header.len();
    let n = values.len() / cols.max(1);
    Ok((header, DMatrix::from_row_slice(n, cols, &values)))
}

/// Reads a `x1,x2,x3,b1,b2,b3` table (header required) of field measurements.
pub fn read_field_csv(path: &Path) -> Result<Dataset, ExperimentError> {
    let (header, all) = read_table(path)?;
    let expected: Vec<&str> = INPUT_COLS.iter().chain(&OUTPUT_COLS).copied().collect();
    if header.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(ExperimentError::Data(format!(
            "{}: expected header {}, found {}",
            path.display(),
            expected.join(","),
            header.join(",")
        )));
    }
    Ok(Dataset::new(
        all.columns(0, 3).into_owned(),
        all.columns(3, 3).into_owned(),
        0.0,
    )?)
}

pub fn write_field_csv(path: &Path, inputs: &DMatrix<f64>, outputs: &DMatrix<f64>) -> Result<(), ExperimentError> {
    if inputs.ncols() != 3 || outputs.ncols() != 3 || inputs.nrows() != outputs.nrows() {
        return Err(ExperimentError::Data(format!(
            "field table needs n x 3 inputs and outputs, got {:?} and {:?}",
            inputs.shape(),
            outputs.shape()
        )));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(INPUT_COLS.iter().chain(&OUTPUT_COLS))?;
    for i in 0..inputs.nrows() {
        let rec: Vec<String> = inputs
            .row(i)
            .iter()
            .chain(outputs.row(i).iter())
            .map(|v| v.to_string())
            .collect();
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Repeated disjoint train/test splits of a measured 3-D field.
/// `config.domain` is ignored; pseudo-observations sit at training inputs.
pub fn run_real_data(config: &ExperimentConfig, dataset_path: &Path) -> Result<RmseReport, ExperimentError> {
    config.validate()?;
    let data = read_field_csv(dataset_path)?;
    let need = config.n_train + config.n_test;
    if data.len() < need {
        return Err(ExperimentError::Data(format!(
            "{} has {} rows but the split needs {} train + {} test",
            dataset_path.display(),
            data.len(),
            config.n_train,
            config.n_test
        )));
    }
    if config.methods.contains(&Method::Artificial) {
        if let Some(&nc) = config.nc_schedule.iter().find(|&&nc| nc > config.n_train) {
            return Err(ExperimentError::Config(format!(
                "Nc = {nc} exceeds the {} training inputs available for pseudo-observations",
                config.n_train
            )));
        }
    }
    let f = make_curl_operator_3d();
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
    let reps = map_indices(Execution::default(), config.repetitions, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(r as u64);
        let idx = sample(&mut rng, data.len(), need).into_vec();
        let (train_idx, test_idx) = idx.split_at(config.n_train);
        let mut train = data.select(train_idx);
        train.noise_std = config.noise_std;
        let queries = select_rows(&data.inputs, test_idx);
        let problem = Problem {
            candidates: train.inputs.clone(),
            train,
            queries: &queries,
            truth: select_rows(&data.outputs, test_idx),
            f: &f,
            g: g.as_ref(),
        };
        run_repetition(r, &problem, &keys, config, &mut rng)
    });
    // test points differ between repetitions; field errors keep the first split's
    let first_queries = {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(0);
        let idx = sample(&mut rng, data.len(), need).into_vec();
        select_rows(&data.inputs, &idx[config.n_train..])
    };
    Ok(aggregate(&keys, reps, &first_queries, config.field_errors))
}
