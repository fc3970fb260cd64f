use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Divergence-free test field on the plane.
pub fn simulated_field(x: &[f64], a: f64) -> [f64; 2] {
    let (x1, x2) = (x[0], x[1]);
    let p = x1 * x2;
    let e = (-a * p).exp();
    let (s, c) = p.sin_cos();
    [e * (a * x1 * s - x1 * c), e * (x2 * c - a * x2 * s)]
}

/// Tensor grid with `n` equally spaced points per dimension, endpoints
/// included; the first coordinate varies slowest.
pub fn grid_points(domain: &[[f64; 2]], n: usize) -> DMatrix<f64> {
    let d = domain.len();
    let total = n.pow(d as u32);
    let coord = |k: usize, [lo, hi]: [f64; 2]| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    DMatrix::from_fn(total, d, |row, col| {
        let k = (row / n.pow((d - 1 - col) as u32)) % n;
        coord(k, domain[col])
    })
}

/// `n` points drawn uniformly from the box.
pub fn uniform_points<R: Rng>(domain: &[[f64; 2]], n: usize, rng: &mut R) -> DMatrix<f64> {
    let d = domain.len();
    let mut m = DMatrix::zeros(n, d);
    for i in 0..n {
        for (j, [lo, hi]) in domain.iter().enumerate() {
            m[(i, j)] = rng.gen_range(*lo..*hi);
        }
    }
    m
}

/// Gradient of a random smooth potential
/// `phi(x) = sum_m c_m cos(w_m . x + b_m)`, hence curl-free.
#[derive(Clone, Debug)]
pub struct CurlFreeField {
    weights: Vec<Vec<f64>>,
    phases: Vec<f64>,
    coeffs: Vec<f64>,
}

impl CurlFreeField {
    /// `terms` random features with frequencies of scale `1 / length_scale`.
    pub fn random<R: Rng>(dim: usize, terms: usize, length_scale: f64, rng: &mut R) -> Self {
        let weights = (0..terms)
            .map(|_| {
                (0..dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        z / length_scale
                    })
                    .collect()
            })
            .collect();
        let phases = (0..terms).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let norm = (2.0 / terms.max(1) as f64).sqrt() * length_scale;
        let coeffs = (0..terms)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * norm
            })
            .collect();
        CurlFreeField { weights, phases, coeffs }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.phases)
            .zip(&self.coeffs)
            .map(|((w, b), c)| c * (dot(w, x) + b).cos())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for ((w, b), c) in self.weights.iter().zip(&self.phases).zip(&self.coeffs) {
            let s = -c * (dot(w, x) + b).sin();
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi += s * wi;
            }
        }
        g
    }

    /// Noisy samples of the gradient at uniform random points: inputs `n x D`, outputs `n x D`.
    pub fn sample<R: Rng>(
        &self,
        domain: &[[f64; 2]],
        n: usize,
        noise_std: f64,
        rng: &mut R,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let x = uniform_points(domain, n, rng);
        let d = domain.len();
        let mut y = DMatrix::zeros(n, d);
        for i in 0..n {
            let p: Vec<f64> = x.row(i).iter().copied().collect();
            for (j, v) in self.gradient(&p).into_iter().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                y[(i, j)] = v + noise_std * z;
            }
        }
        (x, y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
