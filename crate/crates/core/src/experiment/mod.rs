//! Simulated and real-data comparison runs producing RMSE tables.

mod config;
mod field;
mod real;
mod report;
mod runner;
mod simulated;

pub use config::{ExperimentConfig, HyperPolicy, Method};
pub use field::{grid_points, simulated_field, uniform_points, CurlFreeField};
pub use real::{read_field_csv, read_table, run_real_data, write_field_csv};
pub use report::{emit_report, read_rmse_csv, rmse, FieldError, RmseReport, RmseRow, RMSE_HEADER};
pub use simulated::run_simulated;

use crate::gp::GpError;
use crate::operator::OperatorError;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
