use serde::{Deserialize, Serialize};

use super::fit::{FitConfig, KernelFamily};
use super::GpError;
use crate::kernel::{KernelKind, KernelSpec, SeHyperparams};
use crate::operator::{construct_g, ConstructOptions, OperatorMatrix, OperatorSpec};

/// JSON description of a fitted (or to-be-fitted) model.
///
/// Training data is referenced by path: a CSV whose first `input_dim`
/// columns are inputs and the remaining columns are outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kernel: KernelSpec,
    /// Constraint operator `F`, needed when `G` is built automatically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint_operator: Option<OperatorSpec>,
    /// One set, or one per latent component when hyperparameters are per column.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hyperparams: Vec<SeHyperparams>,
    pub noise_variance: f64,
    pub training_data: String,
    pub input_dim: usize,
    /// Refit hyperparameters before predicting, starting from `hyperparams`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitConfig>,
}

/// Kernel family and hyperparameters resolved from a [`ModelSpec`].
#[derive(Clone, Debug)]
pub struct ResolvedModel {
    pub family: KernelFamily,
    pub thetas: Vec<SeHyperparams>,
    pub g: Option<OperatorMatrix>,
}

impl ModelSpec {
    pub fn resolve(&self, output_dim: usize) -> Result<ResolvedModel, GpError> {
        let (family, g) = family_from_spec(&self.kernel, self.constraint_operator.as_ref(), self.input_dim, output_dim)?;
        let thetas = if self.hyperparams.is_empty() {
            vec![self.kernel.hyperparams; family.latent_sets()]
        } else if self.hyperparams.len() == 1 {
            vec![self.hyperparams[0]; family.latent_sets()]
        } else {
            self.hyperparams.clone()
        };
        Ok(ResolvedModel { family, thetas, g })
    }
}

/// Kernel family described by a kernel spec; `F` is required when `G` is automatic.
pub fn family_from_spec(
    kernel: &KernelSpec,
    constraint: Option<&OperatorSpec>,
    input_dim: usize,
    output_dim: usize,
) -> Result<(KernelFamily, Option<OperatorMatrix>), GpError> {
    Ok(match kernel.kind {
        KernelKind::Diagonal => (
            KernelFamily::Diagonal {
                outputs: output_dim,
                dim: input_dim,
            },
            None,
        ),
        KernelKind::CurlFree3d => (KernelFamily::CurlFree3d, None),
        KernelKind::Transformed => {
            let g = match &kernel.g_operator {
                Some(src) if src.is_auto() => {
                    let f = constraint
                        .ok_or_else(|| GpError::Shape("automatic G needs a constraint operator".into()))?
                        .to_matrix()?;
                    construct_g(&f, &ConstructOptions::default())?.0
                }
                Some(crate::kernel::GOperatorSource::Explicit(spec)) => spec.to_matrix()?,
                Some(crate::kernel::GOperatorSource::Auto(other)) => {
                    return Err(GpError::Shape(format!("unknown g_operator value {other:?}")))
                }
                None => return Err(GpError::Shape("transformed kernel needs g_operator".into())),
            };
            (
                KernelFamily::Transformed {
                    g: g.clone(),
                    per_column: kernel.per_column_hyperparams,
                },
                Some(g),
            )
        }
    })
}
