use nalgebra::{DMatrix, DVector};

use super::GpError;

/// Training inputs (`N x D`), outputs (`N x K`), and measurement noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: DMatrix<f64>,
    pub outputs: DMatrix<f64>,
    pub noise_std: f64,
}

impl Dataset {
    pub fn new(inputs: DMatrix<f64>, outputs: DMatrix<f64>, noise_std: f64) -> Result<Self, GpError> {
        if inputs.nrows() != outputs.nrows() {
            return Err(GpError::Shape(format!(
                "{} inputs but {} outputs",
                inputs.nrows(),
                outputs.nrows()
            )));
        }
        if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
            return Err(GpError::NonFinite("dataset entries".into()));
        }
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(GpError::NonFinite(format!("noise std {noise_std}")));
        }
        Ok(Dataset {
            inputs,
            outputs,
            noise_std,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn point(&self, a: usize) -> Vec<f64> {
        self.inputs.row(a).iter().copied().collect()
    }

    /// Outputs stacked point-major: `[y_1; y_2; ...]`.
    pub fn stacked_outputs(&self) -> DVector<f64> {
        stack_rows(&self.outputs)
    }

    /// Rows `idx` of this dataset.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            inputs: select_rows(&self.inputs, idx),
            outputs: select_rows(&self.outputs, idx),
            noise_std: self.noise_std,
        }
    }
}

pub fn stack_rows(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()))
}

pub fn unstack_rows(v: &DVector<f64>, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(v.len() / cols, cols, v.as_slice())
}

pub fn select_rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |r, c| m[(idx[r], c)])
}

/// Points of an `N x D` matrix as owned rows.
pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
