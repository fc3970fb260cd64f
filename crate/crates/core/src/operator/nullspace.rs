use nalgebra::DMatrix;
use num_traits::{Signed, Zero};

use super::{rational_from_f64, rational_to_f64, OperatorError, Rational};

/// Dense row-major matrix of exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    /// Panics if any row length differs from `cols`.
    pub fn from_rows(rows: Vec<Vec<Rational>>, cols: usize) -> Self {
        let n_rows = rows.len();
        let mut data = Vec::with_capacity(n_rows * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "row length mismatch");
            data.extend(row);
        }
        RationalMatrix {
            rows: n_rows,
            cols,
            data,
        }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect())
                .collect(),
            cols,
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    fn get_mut(&mut self, i: usize, j: usize) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn to_rows(&self) -> Vec<Vec<Rational>> {
        if self.cols == 0 {
            return vec![Vec::new(); self.rows];
        }
        self.data.chunks(self.cols).map(<[Rational]>::to_vec).collect()
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(Rational::zero(), |acc, j| acc + self.get(i, j) * &v[j])
            })
            .collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rational_to_f64(self.get(i, j)))
    }

    /// Reduced row echelon form and the pivot column of each nonzero row.
    ///
    /// Pivot choice is the first nonzero entry at or below the current row,
    /// so the result is deterministic.
    pub fn rref(&self) -> (RationalMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(row, p);
            let inv = m.get(row, col).recip();
            for j in col..m.cols {
                let v = m.get(row, j) * &inv;
                *m.get_mut(row, j) = v;
            }
            for r in 0..m.rows {
                if r == row || m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone();
                for j in col..m.cols {
                    let delta = &factor * m.get(row, j);
                    *m.get_mut(r, j) -= delta;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

/// How null spaces are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Arithmetic {
    /// Rational row reduction; exact and deterministic.
    #[default]
    Exact,
    /// SVD with rank threshold `tol * sigma_max`.
    Floating { tol: f64 },
}

pub const DEFAULT_FLOAT_TOL: f64 = 1e-10;

/// Basis of the right null space of `a` by exact row reduction.
///
/// One vector per free column: the free variable is set to 1, the other
/// free variables to 0, and pivot variables are read off the RREF.
pub fn nullspace_exact(a: &RationalMatrix) -> Vec<Vec<Rational>> {
    let (r, pivots) = a.rref();
    let n = a.cols();
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    (0..n)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![Rational::zero(); n];
            v[free] = Rational::from_integer(1.into());
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, free).clone();
            }
            v
        })
        .collect()
}

/// Orthonormal basis of the numerical null space of `a`.
pub fn nullspace_floating(a: &DMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    // Pad with zero rows so the SVD returns a full set of right singular vectors.
    let rows = a.nrows().max(n);
    let mut padded = DMatrix::<f64>::zeros(rows, n);
    padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let threshold = tol * sigma_max.max(f64::MIN_POSITIVE);
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| sigma_max == 0.0 || s <= threshold)
        .map(|(k, _)| v_t.row(k).iter().cloned().collect())
        .collect()
}

/// Null space in the requested arithmetic, returned as exact rationals.
///
/// Floating-mode vectors are converted exactly from their `f64` values.
pub fn nullspace(a: &RationalMatrix, mode: Arithmetic) -> Result<Vec<Vec<Rational>>, OperatorError> {
    match mode {
        Arithmetic::Exact => Ok(nullspace_exact(a)),
        Arithmetic::Floating { tol } => nullspace_floating(&a.to_f64(), tol)
            .into_iter()
            .map(|v| v.into_iter().map(rational_from_f64).collect())
            .collect(),
    }
}

/// Scales `v` so its first nonzero entry is `+1`. Zero vectors are left alone.
pub fn normalize_leading(v: &mut [Rational]) {
    if let Some(lead) = v.iter().find(|x| !x.is_zero()).cloned() {
        for x in v.iter_mut() {
            *x = &*x / &lead;
        }
    }
}

/// Floating counterpart of [`normalize_leading`]; entries below `tol` in
/// magnitude are treated as zero when locating the leading entry.
pub fn normalize_leading_f64(v: &mut [f64], tol: f64) {
    if let Some(lead) = v.iter().find(|x| x.abs() > tol).cloned() {
        for x in v.iter_mut() {
            *x /= lead;
        }
    }
}

/// Largest absolute entry, used to scale residual checks.
pub fn max_abs(a: &RationalMatrix) -> Rational {
    a.data.iter().map(Signed::abs).max().unwrap_or_else(Rational::zero)
}
