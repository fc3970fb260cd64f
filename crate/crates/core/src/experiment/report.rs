use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ExperimentError;

pub const RMSE_HEADER: [&str; 7] = ["method", "nc", "mean", "std", "n_ok", "jitter", "seconds"];

/// `sqrt(|e|^2 / N_P)` where `e` stacks all output components of the
/// `N_P` prediction points. The divisor counts points, not entries.
pub fn rmse(predicted: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    assert_eq!(predicted.shape(), truth.shape(), "prediction and truth shapes differ");
    let n = predicted.nrows();
    if n == 0 {
        return 0.0;
    }
    ((predicted - truth).norm_squared() / n as f64).sqrt()
}

/// Aggregate over repetitions for one method and pseudo-observation count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub method: String,
    pub nc: usize,
    pub mean: f64,
    /// Sample standard deviation across successful repetitions.
    pub std: f64,
    pub n_ok: usize,
    /// Mean diagonal jitter needed to factor the final Gram matrix.
    pub jitter: f64,
    /// Mean wall time per repetition, 0 unless recorded.
    pub seconds: f64,
}

/// Per-point errors `prediction - truth` from one repetition.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldError {
    pub method: String,
    pub nc: usize,
    pub points: DMatrix<f64>,
    pub errors: DMatrix<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RmseReport {
    pub rows: Vec<RmseRow>,
    pub field_errors: Vec<FieldError>,
    /// One message per failed repetition.
    pub failures: Vec<String>,
}

impl RmseReport {
    pub fn row(&self, method: &str, nc: usize) -> Option<&RmseRow> {
        self.rows.iter().find(|r| r.method == method && r.nc == nc)
    }

    pub fn rows_for(&self, method: &str) -> Vec<&RmseRow> {
        self.rows.iter().filter(|r| r.method == method).collect()
    }

    pub fn rmse_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(RMSE_HEADER)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| ExperimentError::Data(e.to_string()))
    }

    pub fn field_error_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        let (d, k) = self
            .field_errors
            .first()
            .map_or((0, 0), |f| (f.points.ncols(), f.errors.ncols()));
        let mut header = vec!["method".to_string(), "nc".to_string()];
        header.extend((1..=d).map(|i| format!("x{i}")));
        header.extend((1..=k).map(|i| format!("e{i}")));
        w.write_record(&header)?;
        for f in &self.field_errors {
            for i in 0..f.points.nrows() {
                let mut rec = vec![f.method.clone(), f.nc.to_string()];
                rec.extend(f.points.row(i).iter().map(|v| v.to_string()));
                rec.extend(f.errors.row(i).iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
        }
        w.into_inner().map_err(|e| ExperimentError::Data(e.to_string()))
    }
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf, ExperimentError> {
    fs::write(&path, bytes).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}

/// Writes `rmse.csv` and `field_error.csv` into `dir`, creating it if needed.
pub fn emit_report(report: &RmseReport, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    Ok(vec![
        write(dir.join("rmse.csv"), &report.rmse_csv()?)?,
        write(dir.join("field_error.csv"), &report.field_error_csv()?)?,
    ])
}

pub fn read_rmse_csv(path: &Path) -> Result<Vec<RmseRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.iter().ne(RMSE_HEADER) {
        return Err(ExperimentError::Data(format!(
            "{}: expected header {}, found {}",
            path.display(),
            RMSE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    r.deserialize().map(|row| row.map_err(ExperimentError::from)).collect()
}
