//! Virtual baseline generators: discrete, continuous (latent Gaussian) and vine copula.

mod continuous;
mod copula;
mod discrete;
mod vine;

pub use continuous::{critical_values, fit_continuous, ContinuousVbgModel};
pub use copula::{
    clamp_events, fit_pair_copula, fit_pair_copula_detailed, fit_pair_copula_mixed, tau_independence_pvalue, Family, Observation,
    PairCopula,
    PairCopulaFit, Rotation, CLAYTON_THETA_MAX, FRANK_THETA_MAX, GAUSSIAN_RHO_MAX, GUMBEL_THETA_MAX, H_CLAMP,
    INDEPENDENCE_TEST_LEVEL,
};
pub use discrete::{fit_discrete, Configuration, DiscreteVbgModel};
pub use vine::{fit_vine, Margin, VineCopulaModel, VineEdge, VineFitOptions, MAX_VINE_DIM};

use crate::dataset::{ColumnSchema, MixedDataset};
use crate::error::Result;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorMethod {
    Discrete,
    Continuous,
    Vine,
}

impl GeneratorMethod {
    pub const ALL: [GeneratorMethod; 3] = [GeneratorMethod::Discrete, GeneratorMethod::Continuous, GeneratorMethod::Vine];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorMethod::Discrete => "discrete",
            GeneratorMethod::Continuous => "continuous",
            GeneratorMethod::Vine => "vine",
        }
    }
}

/// A fitted generator of any of the three kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum GeneratorModel {
    Discrete(DiscreteVbgModel),
    Continuous(ContinuousVbgModel),
    Vine(VineCopulaModel),
}

impl GeneratorModel {
    /// Fits a generator; `seed` only affects the vine's tie-breaking jitter.
    pub fn fit(method: GeneratorMethod, data: &MixedDataset, seed: u64) -> Result<Self> {
        Ok(match method {
            GeneratorMethod::Discrete => GeneratorModel::Discrete(fit_discrete(data)?),
            GeneratorMethod::Continuous => GeneratorModel::Continuous(fit_continuous(data)?),
            GeneratorMethod::Vine => GeneratorModel::Vine(fit_vine(
                data,
                &VineFitOptions {
                    seed,
                    ..VineFitOptions::default()
                },
            )?),
        })
    }

    pub fn method(&self) -> GeneratorMethod {
        match self {
            GeneratorModel::Discrete(_) => GeneratorMethod::Discrete,
            GeneratorModel::Continuous(_) => GeneratorMethod::Continuous,
            GeneratorModel::Vine(_) => GeneratorMethod::Vine,
        }
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        match self {
            GeneratorModel::Discrete(m) => &m.schema,
            GeneratorModel::Continuous(m) => &m.schema,
            GeneratorModel::Vine(m) => &m.schema,
        }
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<MixedDataset> {
        match self {
            GeneratorModel::Discrete(m) => m.sample(n, seed),
            GeneratorModel::Continuous(m) => m.sample(n, seed),
            GeneratorModel::Vine(m) => m.sample(n, seed),
        }
    }
}
