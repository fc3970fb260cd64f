use serde::{Deserialize, Serialize};

use super::KernelError;

/// Highest total derivative order (over both arguments) evaluated in closed form.
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

/// Squared-exponential hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeHyperparams {
    pub signal_variance: f64,
    pub length_scale: f64,
    #[serde(default)]
    pub noise_variance: f64,
}

impl SeHyperparams {
    pub fn new(signal_variance: f64, length_scale: f64, noise_variance: f64) -> Result<Self, KernelError> {
        let h = SeHyperparams {
            signal_variance,
            length_scale,
            noise_variance,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let ok = self.signal_variance.is_finite()
            && self.signal_variance > 0.0
            && self.length_scale.is_finite()
            && self.length_scale > 0.0
            && self.noise_variance.is_finite()
            && self.noise_variance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(KernelError::InvalidHyperparams(*self))
        }
    }
}

impl Default for SeHyperparams {
    fn default() -> Self {
        SeHyperparams {
            signal_variance: 1.0,
            length_scale: 1.0,
            noise_variance: 0.0,
        }
    }
}

/// Orders of differentiation with respect to each coordinate of the first
/// (`alpha`) and second (`beta`) kernel argument.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DerivativeMultiIndex {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
}

impl DerivativeMultiIndex {
    pub fn new(alpha: Vec<u32>, beta: Vec<u32>) -> Self {
        assert_eq!(alpha.len(), beta.len(), "multi-index halves must share dimension");
        DerivativeMultiIndex { alpha, beta }
    }

    pub fn zero(dim: usize) -> Self {
        DerivativeMultiIndex {
            alpha: vec![0; dim],
            beta: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn order(&self) -> u32 {
        self.alpha.iter().sum::<u32>() + self.beta.iter().sum::<u32>()
    }

    /// Same derivatives with the roles of the two arguments exchanged.
    pub fn swapped(&self) -> Self {
        DerivativeMultiIndex {
            alpha: self.beta.clone(),
            beta: self.alpha.clone(),
        }
    }

    pub fn add_alpha(&self, exps: &[u32]) -> Self {
        let mut out = self.clone();
        out.alpha.iter_mut().zip(exps).for_each(|(a, e)| *a += e);
        out
    }

    pub fn add_beta(&self, exps: &[u32]) -> Self {
        let mut out = self.clone();
        out.beta.iter_mut().zip(exps).for_each(|(b, e)| *b += e);
        out
    }
}

/// A stationary scalar covariance with mixed partial derivatives.
pub trait DerivativeKernel: Send + Sync {
    fn value(&self, x: &[f64], x2: &[f64]) -> f64;

    /// `d^alpha/dx^alpha d^beta/dx'^beta k(x, x')`.
    fn derivative(&self, idx: &DerivativeMultiIndex, x: &[f64], x2: &[f64]) -> Result<f64, KernelError>;
}

/// `k(x, x') = sf2 * exp(-|x - x'|^2 / (2 l^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquaredExponential {
    pub params: SeHyperparams,
}

impl SquaredExponential {
    pub fn new(params: SeHyperparams) -> Self {
        SquaredExponential { params }
    }
}

pub fn se_eval(x: &[f64], x2: &[f64], theta: &SeHyperparams) -> f64 {
    assert_eq!(x.len(), x2.len(), "point dimensions differ");
    let l2 = theta.length_scale * theta.length_scale;
    let r2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    theta.signal_variance * (-0.5 * r2 / l2).exp()
}

/// Probabilists' Hermite polynomial `He_n(u)` via `He_{n+1} = u He_n - n He_{n-1}`.
pub fn hermite_he(n: u32, u: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, u);
    match n {
        0 => prev,
        _ => {
            for k in 1..n {
                let next = u * cur - f64::from(k) * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Mixed partial derivative of the SE kernel.
///
/// The kernel factorises over coordinates as `prod_d phi(r_d)` with
/// `r = x - x'` and `phi(t) = exp(-t^2 / 2l^2)`, and
/// `phi^(n)(t) = (-1/l)^n He_n(t/l) phi(t)`. Each derivative with respect to
/// `x'_d` contributes a factor `-1` through `dr_d/dx'_d`.
pub fn se_derivative(
    idx: &DerivativeMultiIndex,
    x: &[f64],
    x2: &[f64],
    theta: &SeHyperparams,
) -> Result<f64, KernelError> {
    if idx.dim() != x.len() || x.len() != x2.len() {
        return Err(KernelError::Dimension {
            expected: idx.dim(),
            found: x.len().max(x2.len()),
        });
    }
    let order = idx.order();
    if order > MAX_DERIVATIVE_ORDER {
        return Err(KernelError::OrderTooHigh {
            order,
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    let l = theta.length_scale;
    let mut value = theta.signal_variance;
    let mut r2 = 0.0;
    let mut beta_total = 0;
    for d in 0..x.len() {
        let r = x[d] - x2[d];
        r2 += r * r;
        let n = idx.alpha[d] + idx.beta[d];
        beta_total += idx.beta[d];
        if n > 0 {
            let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
            value *= sign * hermite_he(n, r / l) / l.powi(n as i32);
        }
    }
    if beta_total % 2 == 1 {
        value = -value;
    }
    Ok(value * (-0.5 * r2 / (l * l)).exp())
}

impl DerivativeKernel for SquaredExponential {
    fn value(&self, x: &[f64], x2: &[f64]) -> f64 {
        se_eval(x, x2, &self.params)
    }

    fn derivative(&self, idx: &DerivativeMultiIndex, x: &[f64], x2: &[f64]) -> Result<f64, KernelError> {
        se_derivative(idx, x, x2, &self.params)
    }
}
