use std::collections::{BTreeMap, BTreeSet};

use super::matrix::OperatorMatrix;
use super::monomial::Monomial;
use super::nullspace::RationalMatrix;
use super::poly::OperatorPoly;
use super::{OperatorError, Rational};

/// The operator vector a column of `G` is expanded in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnsatzBasis {
    vars: usize,
    degrees: BTreeSet<u32>,
    monomials: Vec<Monomial>,
}

impl AnsatzBasis {
    /// Every monomial over `vars` variables whose degree is in `degrees`,
    /// in graded-lex order.
    pub fn new(vars: usize, degrees: impl IntoIterator<Item = u32>) -> Self {
        let degrees: BTreeSet<u32> = degrees.into_iter().collect();
        let monomials = degrees
            .iter()
            .flat_map(|&d| Monomial::all_of_degree(vars, d))
            .collect();
        AnsatzBasis {
            vars,
            degrees,
            monomials,
        }
    }

    pub fn homogeneous(vars: usize, degree: u32) -> Self {
        Self::new(vars, [degree])
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degrees(&self) -> &BTreeSet<u32> {
        &self.degrees
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }
}

/// Linear system `A vec(Gamma) = 0` equivalent to `F (Gamma xi) = 0`.
///
/// Columns are ordered component-major: column `j * M + k` holds the
/// coefficient of ansatz monomial `k` in output component `j`. Rows are
/// grouped by constraint row `i`, then by product monomial in graded-lex
/// order.
#[derive(Clone, Debug)]
pub struct AnsatzSystem {
    pub matrix: RationalMatrix,
    /// `(constraint row, product monomial)` for every row of `matrix`.
    pub row_index: Vec<(usize, Monomial)>,
    /// `(output component, ansatz monomial position)` for every column.
    pub col_index: Vec<(usize, usize)>,
    pub ansatz: AnsatzBasis,
    /// Number of output components (columns of `F`).
    pub outputs: usize,
}

pub fn build_ansatz_system(f: &OperatorMatrix, ansatz: &AnsatzBasis) -> Result<AnsatzSystem, OperatorError> {
    if f.rows() == 0 || f.cols() == 0 {
        return Err(OperatorError::Shape("constraint operator is empty".into()));
    }
    if f.vars() != ansatz.vars() {
        return Err(OperatorError::VarMismatch {
            expected: f.vars(),
            found: ansatz.vars(),
        });
    }
    let n = f.cols();
    let m_g = ansatz.len();
    let col_index: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..m_g).map(move |k| (j, k))).collect();

    let mut row_index = Vec::new();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for i in 0..f.rows() {
        // product monomial -> coefficient row
        let mut collected: BTreeMap<Monomial, Vec<Rational>> = BTreeMap::new();
        for j in 0..n {
            let entry: &OperatorPoly = f.get(i, j);
            for (mf, c) in entry.terms() {
                for (k, mg) in ansatz.monomials().iter().enumerate() {
                    let row = collected
                        .entry(mf.mul(mg))
                        .or_insert_with(|| vec![Rational::default(); n * m_g]);
                    row[j * m_g + k] += c;
                }
            }
        }
        for (m, row) in collected {
            row_index.push((i, m));
            rows.push(row);
        }
    }
    Ok(AnsatzSystem {
        matrix: RationalMatrix::from_rows(rows, n * m_g),
        row_index,
        col_index,
        ansatz: ansatz.clone(),
        outputs: n,
    })
}

impl AnsatzSystem {
    /// Reshapes a null vector into the `n x M` coefficient matrix `Gamma`.
    pub fn reshape(&self, v: &[Rational]) -> Vec<Vec<Rational>> {
        let m_g = self.ansatz.len();
        (0..self.outputs).map(|j| v[j * m_g..(j + 1) * m_g].to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::matrix::{make_curl_operator_3d, make_divergence_operator};
    use crate::operator::rational_from_i64 as r;

    #[test]
    fn ansatz_basis_mixed_degrees() {
        let a = AnsatzBasis::new(2, [0, 1]);
        let exps: Vec<_> = a.monomials().iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(exps, vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn zero_operator_gives_zero_system() {
        let f = OperatorMatrix::zeros(1, 1, 2);
        let sys = build_ansatz_system(&f, &AnsatzBasis::homogeneous(2, 1)).unwrap();
        assert_eq!(sys.matrix.cols(), 2);
        assert!(sys.matrix.is_zero());
    }

    #[test]
    fn two_d_divergence_matches_hand_expansion() {
        let sys = build_ansatz_system(&make_divergence_operator(2), &AnsatzBasis::homogeneous(2, 1)).unwrap();
        let expected = vec![
            vec![r(1), r(0), r(0), r(0)],
            vec![r(0), r(1), r(1), r(0)],
            vec![r(0), r(0), r(0), r(1)],
        ];
        assert_eq!(sys.matrix.to_rows(), expected);
        let monos: Vec<_> = sys.row_index.iter().map(|(_, m)| m.exponents().to_vec()).collect();
        assert_eq!(monos, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn row_degrees_add_up() {
        let f = make_curl_operator_3d();
        for q in 0..3 {
            let sys = build_ansatz_system(&f, &AnsatzBasis::homogeneous(3, q)).unwrap();
            assert!(sys.row_index.iter().all(|(_, m)| m.degree() == q + 1));
        }
    }

    #[test]
    fn var_mismatch_is_reported() {
        let err = build_ansatz_system(&make_divergence_operator(2), &AnsatzBasis::homogeneous(3, 1));
        assert!(matches!(err, Err(OperatorError::VarMismatch { .. })));
    }
}
