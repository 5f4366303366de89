use crate::dataset::{Column, ColumnSchema, MixedDataset};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{cholesky_factor, sample_mean_cov, CovarianceMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One observed combination of categorical values and the Gaussian fitted
/// to the continuous columns of its rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// Category codes, one per categorical column in schema order.
    pub categories: Vec<u32>,
    pub probability: f64,
    pub rows: usize,
    pub mean: Vec<f64>,
    pub covariance: CovarianceMatrix,
    /// True when the configuration had too few rows and uses the pooled covariance.
    #[serde(default)]
    pub pooled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteVbgModel {
    pub schema: Vec<ColumnSchema>,
    pub configurations: Vec<Configuration>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// Splits rows by categorical configuration and fits a Gaussian per split.
pub fn fit_discrete(data: &MixedDataset) -> Result<DiscreteVbgModel> {
    let cont = data.continuous_indices();
    let cat = data.categorical_indices();
    if cont.is_empty() {
        return Err(Error::InsufficientData("discrete method needs at least one continuous column".into()));
    }
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::InsufficientData("cannot fit a generator on an empty dataset".into()));
    }
    let dc = cont.len();
    let mut groups: BTreeMap<Vec<u32>, Vec<Vec<f64>>> = BTreeMap::new();
    let mut all_rows = Vec::with_capacity(n);
    for r in 0..n {
        let key: Vec<u32> = cat.iter().map(|&j| data.value(r, j) as u32).collect();
        let row: Vec<f64> = cont.iter().map(|&j| data.value(r, j)).collect();
        groups.entry(key).or_default().push(row.clone());
        all_rows.push(row);
    }
    let (_, pooled_cov) = sample_mean_cov(&all_rows, dc);
    let mut diagnostics = Vec::new();
    let mut configurations = Vec::with_capacity(groups.len());
    for (key, rows) in groups {
        let (mean, cov) = sample_mean_cov(&rows, dc);
        let sparse = rows.len() < dc + 1;
        if sparse {
            let msg = format!(
                "configuration {:?} has {} rows (< {}); using pooled covariance",
                labels(data.schema(), &cat, &key),
                rows.len(),
                dc + 1
            );
            log::warn!("{msg}");
            diagnostics.push(msg);
        }
        configurations.push(Configuration {
            categories: key,
            probability: rows.len() as f64 / n as f64,
            rows: rows.len(),
            mean,
            covariance: if sparse { pooled_cov.clone() } else { cov },
            pooled: sparse,
        });
    }
    Ok(DiscreteVbgModel {
        schema: data.schema().to_vec(),
        configurations,
        diagnostics,
    })
}

fn labels(schema: &[ColumnSchema], cat: &[usize], key: &[u32]) -> Vec<String> {
    cat.iter()
        .zip(key)
        .map(|(&j, &c)| format!("{}={}", schema[j].name, schema[j].categories[c as usize]))
        .collect()
}

impl DiscreteVbgModel {
    pub fn sample(&self, n: usize, seed: u64) -> Result<MixedDataset> {
        let cont: Vec<usize> = (0..self.schema.len()).filter(|&j| !self.schema[j].is_categorical()).collect();
        let cat: Vec<usize> = (0..self.schema.len()).filter(|&j| self.schema[j].is_categorical()).collect();
        let factors = self
            .configurations
            .iter()
            .map(|c| cholesky_factor(&c.covariance))
            .collect::<Result<Vec<_>>>()?;
        let total: f64 = self.configurations.iter().map(|c| c.probability).sum();
        let mut r = rng::stream(seed, "discrete/sample");
        let mut cont_out: Vec<Vec<f64>> = vec![Vec::with_capacity(n); cont.len()];
        let mut cat_out: Vec<Vec<u32>> = vec![Vec::with_capacity(n); cat.len()];
        let mut z = vec![0.0; cont.len()];
        let mut x = vec![0.0; cont.len()];
        for _ in 0..n {
            let u: f64 = r.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = self.configurations.len() - 1;
            for (i, c) in self.configurations.iter().enumerate() {
                acc += c.probability;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            let config = &self.configurations[pick];
            for zi in z.iter_mut() {
                *zi = r.sample(StandardNormal);
            }
            factors[pick].mul_vec(&z, &mut x);
            for (k, out) in cont_out.iter_mut().enumerate() {
                out.push(x[k] + config.mean[k]);
            }
            for (k, out) in cat_out.iter_mut().enumerate() {
                out.push(config.categories[k]);
            }
        }
        let mut cont_iter = cont_out.into_iter();
        let mut cat_iter = cat_out.into_iter();
        let columns = self
            .schema
            .iter()
            .map(|s| {
                if s.is_categorical() {
                    Column::Categorical(cat_iter.next().unwrap())
                } else {
                    Column::Continuous(cont_iter.next().unwrap())
                }
            })
            .collect();
        MixedDataset::new(self.schema.clone(), columns)
    }
}
