use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::Zero;

use super::ansatz::{build_ansatz_system, AnsatzBasis};
use super::matrix::OperatorMatrix;
use super::nullspace::{
    nullspace, nullspace_floating, normalize_leading, normalize_leading_f64, Arithmetic, DEFAULT_FLOAT_TOL,
};
use super::poly::OperatorPoly;
use super::{rational_from_f64, OperatorError, Rational};

pub const DEFAULT_MAX_DEGREE: u32 = 3;

// Coefficients whose exact denominators exceed this are treated as
// approximations of irrational values and routed to floating arithmetic.
const EXACT_DENOMINATOR_LIMIT: u64 = 1 << 32;

#[derive(Clone, Debug)]
pub struct ConstructOptions {
    pub max_degree: u32,
    /// `None` picks exact arithmetic unless `F` carries non-rational-looking coefficients.
    pub arithmetic: Option<Arithmetic>,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            max_degree: DEFAULT_MAX_DEGREE,
            arithmetic: None,
        }
    }
}

/// Null-space basis of the accepted ansatz, one `n x M` matrix per column of `G`.
#[derive(Clone, Debug)]
pub struct GammaSolution {
    pub basis: Vec<Vec<Vec<Rational>>>,
    pub ansatz: AnsatzBasis,
    pub arithmetic: Arithmetic,
    /// Degree sets tried before (and including) the accepted one.
    pub attempts: Vec<BTreeSet<u32>>,
}

/// Ansatz degree sets in the order they are tried: homogeneous degrees from
/// the degree of `F` upward, then mixed ranges starting at zero.
pub fn escalation_schedule(f_degree: u32, max_degree: u32) -> Vec<BTreeSet<u32>> {
    let mut out: Vec<BTreeSet<u32>> = Vec::new();
    for q in f_degree..=max_degree {
        out.push([q].into_iter().collect());
    }
    for top in f_degree..=max_degree {
        let set: BTreeSet<u32> = (0..=top).collect();
        if !out.contains(&set) {
            out.push(set);
        }
    }
    out
}

fn choose_arithmetic(f: &OperatorMatrix) -> Arithmetic {
    let limit = BigInt::from(EXACT_DENOMINATOR_LIMIT);
    let all_small = (0..f.rows())
        .flat_map(|i| (0..f.cols()).map(move |j| (i, j)))
        .all(|(i, j)| f.get(i, j).terms().all(|(_, c)| c.denom() <= &limit));
    if all_small {
        Arithmetic::Exact
    } else {
        Arithmetic::Floating {
            tol: DEFAULT_FLOAT_TOL,
        }
    }
}

/// Finds `G` with `F G = 0` by solving for the coefficients of a polynomial
/// ansatz, escalating the ansatz until the null space is nontrivial.
///
/// Each column of `G` is normalised so that its first nonzero coefficient
/// (component-major, graded-lex within a component) equals `+1`.
pub fn construct_g(
    f: &OperatorMatrix,
    options: &ConstructOptions,
) -> Result<(OperatorMatrix, GammaSolution), OperatorError> {
    if f.rows() == 0 || f.cols() == 0 {
        return Err(OperatorError::Shape("constraint operator is empty".into()));
    }
    let f_degree = f.max_degree().unwrap_or(0);
    if options.max_degree < f_degree {
        return Err(OperatorError::InvalidArgument(format!(
            "max degree {} is below the operator degree {f_degree}",
            options.max_degree
        )));
    }
    let arithmetic = options.arithmetic.unwrap_or_else(|| choose_arithmetic(f));
    let mut attempts = Vec::new();
    for degrees in escalation_schedule(f_degree, options.max_degree) {
        attempts.push(degrees.clone());
        let ansatz = AnsatzBasis::new(f.vars(), degrees.iter().copied());
        let system = build_ansatz_system(f, &ansatz)?;
        let vectors = match arithmetic {
            Arithmetic::Exact => {
                let mut vs = nullspace(&system.matrix, arithmetic)?;
                vs.iter_mut().for_each(|v| normalize_leading(v));
                vs
            }
            Arithmetic::Floating { tol } => nullspace_floating(&system.matrix.to_f64(), tol)
                .into_iter()
                .map(|mut v| {
                    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                    for x in v.iter_mut() {
                        if x.abs() <= tol * scale {
                            *x = 0.0;
                        }
                    }
                    normalize_leading_f64(&mut v, 0.0);
                    v.into_iter().map(rational_from_f64).collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?,
        };
        if vectors.is_empty() {
            log::debug!("ansatz degrees {degrees:?}: trivial null space");
            continue;
        }
        let basis: Vec<Vec<Vec<Rational>>> = vectors.iter().map(|v| system.reshape(v)).collect();
        let g = assemble_g(f.cols(), f.vars(), &ansatz, &basis);
        return Ok((
            g,
            GammaSolution {
                basis,
                ansatz,
                arithmetic,
                attempts,
            },
        ));
    }
    Err(OperatorError::NoAnnihilatorFound {
        max_degree: options.max_degree,
    })
}

/// `G = [Gamma_1 xi, ..., Gamma_P xi]`.
pub fn assemble_g(n: usize, vars: usize, ansatz: &AnsatzBasis, basis: &[Vec<Vec<Rational>>]) -> OperatorMatrix {
    let mut g = OperatorMatrix::zeros(n, basis.len(), vars);
    for (p, gamma) in basis.iter().enumerate() {
        for (j, row) in gamma.iter().enumerate() {
            let mut entry = OperatorPoly::zero(vars);
            for (k, c) in row.iter().enumerate() {
                if !c.is_zero() {
                    entry.add_term(ansatz.monomials()[k].clone(), c.clone());
                }
            }
            g.set(j, p, entry);
        }
    }
    g
}
