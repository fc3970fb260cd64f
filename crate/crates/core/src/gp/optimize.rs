//! Derivative-free Nelder-Mead simplex minimisation.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the spread of objective values across the simplex falls below this.
    pub f_tol: f64,
    /// Stop when every vertex lies within this distance of the best one (max norm).
    pub x_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evals: 300,
            f_tol: 1e-8,
            x_tol: 1e-6,
            initial_step: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best objective value seen after each evaluation; never increases.
    pub best_trace: Vec<f64>,
}

struct Tracked<F> {
    f: F,
    evals: usize,
    best_x: Vec<f64>,
    best: f64,
    trace: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Tracked<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let raw = (self.f)(x);
        let v = if raw.is_nan() { f64::INFINITY } else { raw };
        self.evals += 1;
        if v < self.best {
            self.best = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(self.best);
        v
    }
}

/// Minimises `f` starting from `x0`. NaN objective values count as `+inf`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = x0.len();
    let mut t = Tracked {
        f,
        evals: 0,
        best_x: x0.to_vec(),
        best: f64::INFINITY,
        trace: Vec::new(),
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = t.eval(x0);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = t.eval(&x);
        simplex.push((x, v));
    }

    while t.evals < opts.max_evals && n > 0 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best_v, worst_v) = (simplex[0].1, simplex[n].1);
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if best_v.is_finite() && (worst_v - best_v).abs() <= opts.f_tol && x_spread <= opts.x_tol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|(x, _)| x[d]).sum::<f64>() / n as f64)
            .collect();
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let vr = t.eval(&xr);
        if vr < simplex[0].1 {
            let xe = along(EXPAND);
            let ve = t.eval(&xe);
            simplex[n] = if ve < vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr < simplex[n - 1].1 {
            simplex[n] = (xr, vr);
            continue;
        }
        // contraction: outside if the reflection improved on the worst vertex
        let (xc, vc) = if vr < worst_v {
            let x = along(CONTRACT);
            let v = t.eval(&x);
            (x, v)
        } else {
            let x = along(-CONTRACT);
            let v = t.eval(&x);
            (x, v)
        };
        if vc < worst_v.min(vr) {
            simplex[n] = (xc, vc);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best_x
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + SHRINK * (v - b))
                .collect();
            let v = t.eval(&x);
            *vertex = (x, v);
        }
    }

    Minimum {
        x: t.best_x,
        value: t.best,
        evaluations: t.evals,
        best_trace: t.trace,
    }
}
