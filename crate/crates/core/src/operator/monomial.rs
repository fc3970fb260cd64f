use std::cmp::Ordering;
use std::fmt;

/// A product of commuting derivative symbols, stored by exponent vector.
///
/// `exponents[k]` is the number of times `d/dx(k+1)` appears. Because the
/// symbols commute, the exponent vector is the canonical representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial { exponents }
    }

    /// The constant monomial (identity operator) over `vars` variables.
    pub fn one(vars: usize) -> Self {
        Monomial {
            exponents: vec![0; vars],
        }
    }

    /// First-order derivative with respect to variable `var` (0-based).
    pub fn var(vars: usize, var: usize) -> Self {
        let mut exponents = vec![0; vars];
        exponents[var] = 1;
        Monomial { exponents }
    }

    pub fn vars(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.vars(), other.vars());
        Monomial {
            exponents: self
                .exponents
                .iter()
                .zip(&other.exponents)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// All monomials of exactly `degree` over `vars` variables, in graded-lex order.
    pub fn all_of_degree(vars: usize, degree: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut current = vec![0u32; vars];
        fill(&mut out, &mut current, 0, degree);
        out
    }
}

// Exponents for position `pos` are enumerated from high to low so the
// output comes out in graded-lex order without sorting.
fn fill(out: &mut Vec<Monomial>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if current.is_empty() {
        if remaining == 0 {
            out.push(Monomial::new(Vec::new()));
        }
        return;
    }
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(Monomial::new(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill(out, current, pos + 1, remaining - e);
    }
    current[pos] = 0;
}

/// Graded lexicographic: lower total degree first; within a degree, larger
/// exponent on earlier variables first (x1^2 < x1 x2 < x2^2).
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Renders as `d/dx1`, `d^2/dx1dx2`, `d^3/dx1^2dx3`, or `1` for the identity.
impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let degree = self.degree();
        if degree == 0 {
            return write!(f, "1");
        }
        if degree == 1 {
            write!(f, "d/")?;
        } else {
            write!(f, "d^{degree}/")?;
        }
        for (k, &e) in self.exponents.iter().enumerate() {
            match e {
                0 => {}
                1 => write!(f, "dx{}", k + 1)?,
                _ => write!(f, "dx{}^{}", k + 1, e)?,
            }
        }
        Ok(())
    }
}
