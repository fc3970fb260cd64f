use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::gp::FitConfig;
use crate::kernel::SeHyperparams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Independent outputs sharing one SE kernel.
    Diagonal,
    /// Kernel transformed by the annihilator of the constraint operator.
    Constrained,
    /// Closed-form curl-free kernel (3-D only).
    CurlFree,
    /// Diagonal kernel plus noise-free pseudo-observations of the constraint.
    Artificial,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Diagonal => "diagonal",
            Method::Constrained => "constrained",
            Method::CurlFree => "curl_free",
            Method::Artificial => "artificial",
        }
    }
}

/// How kernel hyperparameters are chosen in each repetition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperPolicy {
    /// Maximise the marginal likelihood per repetition and method.
    Fit(FitConfig),
    /// Use the same hyperparameters everywhere.
    Fixed(SeHyperparams),
}

impl Default for HyperPolicy {
    fn default() -> Self {
        HyperPolicy::Fit(FitConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `[lo, hi]` per input dimension.
    pub domain: Vec<[f64; 2]>,
    pub n_train: usize,
    /// Held-out points per repetition (real data only).
    pub n_test: usize,
    /// Pseudo-observation counts for the artificial method.
    pub nc_schedule: Vec<usize>,
    /// Prediction grid points per direction (simulated only).
    pub grid: usize,
    pub noise_std: f64,
    /// Decay parameter of the simulated field.
    pub a: f64,
    pub repetitions: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub hyper: HyperPolicy,
    /// Upper bound on operator degree when searching for the annihilator.
    pub max_degree: u32,
    /// Fill the `seconds` column; otherwise it is written as 0 so reports are reproducible.
    pub record_wall_time: bool,
    /// Keep per-point errors of the first repetition for `field_error.csv`.
    pub field_errors: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: vec![[0.0, 4.0], [0.0, 4.0]],
            n_train: 50,
            n_test: 1000,
            nc_schedule: vec![0, 25, 50, 100, 200, 400],
            grid: 20,
            noise_std: 1e-4,
            a: 0.01,
            repetitions: 10,
            seed: 0,
            methods: vec![Method::Diagonal, Method::Constrained, Method::Artificial],
            hyper: HyperPolicy::default(),
            max_degree: crate::operator::DEFAULT_MAX_DEGREE,
            record_wall_time: false,
            field_errors: true,
        }
    }
}

impl ExperimentConfig {
    /// Settings for the magnetic-field style comparison in three dimensions.
    pub fn real_default() -> Self {
        ExperimentConfig {
            domain: vec![[0.0, 1.0]; 3],
            n_train: 500,
            n_test: 1000,
            nc_schedule: vec![0, 100],
            noise_std: 0.05,
            methods: vec![Method::CurlFree, Method::Diagonal, Method::Artificial],
            hyper: HyperPolicy::Fit(FitConfig {
                restarts: 2,
                max_points: Some(120),
                ..FitConfig::default()
            }),
            ..ExperimentConfig::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let c: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            ExperimentError::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.domain.is_empty() {
            return bad("domain must have at least one dimension".into());
        }
        for (d, [lo, hi]) in self.domain.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("domain bounds for dimension {} are not ordered: [{lo}, {hi}]", d + 1));
            }
        }
        for (name, v) in [
            ("n_train", self.n_train),
            ("n_test", self.n_test),
            ("grid", self.grid),
            ("repetitions", self.repetitions),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if self.methods.contains(&Method::Artificial) && self.nc_schedule.is_empty() {
            return bad("artificial method needs a non-empty nc_schedule".into());
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std must be a non-negative number, got {}", self.noise_std));
        }
        if !self.a.is_finite() {
            return bad("a must be finite".into());
        }
        if let HyperPolicy::Fixed(t) = &self.hyper {
            t.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_std * self.noise_std
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::real_default().validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let c = ExperimentConfig::real_default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c = ExperimentConfig::from_json(r#"{"repetitions": 2, "methods": ["diagonal"]}"#).unwrap();
        assert_eq!(c.repetitions, 2);
        assert_eq!(c.n_train, 50);
        assert_eq!(c.methods, vec![Method::Diagonal]);
    }

    #[test]
    fn rejects_bad_values() {
        let c = ExperimentConfig {
            domain: vec![[1.0, 0.0]],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ExperimentConfig {
            repetitions: 0,
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        match ExperimentConfig::from_json("{\n  \"n_train\": }") {
            Err(ExperimentError::Config(m)) => assert!(m.contains("line 2"), "{m}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
