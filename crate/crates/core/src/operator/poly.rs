use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::monomial::Monomial;
use super::{rational_from_f64, rational_to_f64, OperatorError, Rational};

/// Degree structure of a polynomial operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Degree {
    /// The zero polynomial has no degree.
    Zero,
    Homogeneous(u32),
    Mixed,
}

/// A scalar linear differential operator with constant coefficients,
/// written as a polynomial in commuting derivative symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorPoly {
    vars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl OperatorPoly {
    pub fn zero(vars: usize) -> Self {
        OperatorPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: Rational) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(Monomial::one(vars), c);
        p
    }

    /// `d/dx(var+1)` with unit coefficient.
    pub fn derivative(vars: usize, var: usize) -> Self {
        Self::monomial(Monomial::var(vars, var), Rational::one())
    }

    pub fn monomial(m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero(m.vars());
        p.add_term(m, c);
        p
    }

    pub fn from_terms(
        vars: usize,
        terms: impl IntoIterator<Item = (Monomial, Rational)>,
    ) -> Result<Self, OperatorError> {
        let mut p = Self::zero(vars);
        for (m, c) in terms {
            if m.vars() != vars {
                return Err(OperatorError::VarMismatch {
                    expected: vars,
                    found: m.vars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    /// Builds from floating-point coefficients, converted exactly.
    pub fn from_f64_terms(
        vars: usize,
        terms: impl IntoIterator<Item = (Monomial, f64)>,
    ) -> Result<Self, OperatorError> {
        let exact = terms
            .into_iter()
            .map(|(m, c)| rational_from_f64(c).map(|r| (m, r)))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_terms(vars, exact)
    }

    /// Adds `c * m`, dropping the entry if it cancels to zero.
    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        debug_assert_eq!(m.vars(), self.vars);
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Terms with coefficients rounded to `f64`.
    pub fn terms_f64(&self) -> Vec<(Monomial, f64)> {
        self.terms
            .iter()
            .map(|(m, c)| (m.clone(), rational_to_f64(c)))
            .collect()
    }

    pub fn degree(&self) -> Degree {
        let mut degrees = self.terms.keys().map(Monomial::degree);
        match degrees.next() {
            None => Degree::Zero,
            Some(d) => {
                if degrees.all(|e| e == d) {
                    Degree::Homogeneous(d)
                } else {
                    Degree::Mixed
                }
            }
        }
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn add(&self, other: &OperatorPoly) -> OperatorPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> OperatorPoly {
        let mut out = Self::zero(self.vars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Product of two operators; symbols commute so exponents simply add.
    pub fn mul(&self, other: &OperatorPoly) -> OperatorPoly {
        debug_assert_eq!(self.vars, other.vars);
        let mut out = Self::zero(self.vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl fmt::Display for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            let magnitude = c.abs();
            match (k, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let unit = magnitude.is_one();
            if m.degree() == 0 {
                write!(f, "{magnitude}")?;
            } else if unit {
                write!(f, "{m}")?;
            } else {
                write!(f, "{magnitude}*{m}")?;
            }
        }
        Ok(())
    }
}
