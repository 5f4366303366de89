use super::vine::bracket_values;
use crate::dataset::{Column, ColumnSchema, MixedDataset};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{cholesky_factor, mvn_sample_factored, norm_quantile, sample_mean_cov, CovarianceMatrix};
use serde::{Deserialize, Serialize};

/// Cumulative probabilities are kept this far from 0 and 1 so that every
/// critical value stays finite.
const CUMULATIVE_EPS: f64 = 1e-16;

/// Joint Gaussian over all columns, categorical ones recoded as integer codes
/// 0..M−1 and recovered by thresholding the latent draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousVbgModel {
    pub schema: Vec<ColumnSchema>,
    pub mean: Vec<f64>,
    pub covariance: CovarianceMatrix,
    /// Interior thresholds CrV_1..CrV_{M−1} per column (empty for continuous
    /// columns); the outer thresholds are −∞ and +∞.
    pub critical_values: Vec<Vec<f64>>,
    pub category_probs: Vec<Vec<f64>>,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

/// Thresholds `mean + sd·Φ⁻¹(P_m)` for the cumulative probabilities P_1..P_{M−1}.
pub fn critical_values(mean: f64, sd: f64, probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs[..probs.len().saturating_sub(1)]
        .iter()
        .map(|p| {
            acc += p;
            mean + sd * norm_quantile(acc.clamp(CUMULATIVE_EPS, 1.0 - CUMULATIVE_EPS))
        })
        .collect()
}

pub fn fit_continuous(data: &MixedDataset) -> Result<ContinuousVbgModel> {
    let k = data.n_cols();
    let n = data.n_rows();
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "continuous method needs more rows than columns ({n} rows, {k} columns)"
        )));
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|r| data.row(r)).collect();
    let (mean, mut cov) = sample_mean_cov(&rows, k);
    let mut diagnostics = Vec::new();

    let level = cov.trace() / k as f64;
    let l = cholesky_factor(&cov)?;
    let min_pivot = (0..k).map(|j| l.get(j, j).powi(2)).fold(f64::INFINITY, f64::min);
    if level > 0.0 && min_pivot < 1e-12 * level {
        let ridge = 1e-8 * level;
        let msg = format!("covariance is singular; added ridge {ridge:e} to the diagonal");
        log::warn!("{msg}");
        diagnostics.push(msg);
        cov = cov.with_ridge(ridge);
    }

    let mut crit = Vec::with_capacity(k);
    let mut probs = Vec::with_capacity(k);
    for j in 0..k {
        if data.schema()[j].is_categorical() {
            let p = data.category_proportions(j)?;
            if p.contains(&0.0) {
                let msg = format!("column '{}' has categories never observed", data.schema()[j].name);
                log::warn!("{msg}");
                diagnostics.push(msg);
            }
            crit.push(critical_values(mean[j], cov.get(j, j).sqrt(), &p));
            probs.push(p);
        } else {
            crit.push(Vec::new());
            probs.push(Vec::new());
        }
    }
    Ok(ContinuousVbgModel {
        schema: data.schema().to_vec(),
        mean,
        covariance: cov,
        critical_values: crit,
        category_probs: probs,
        diagnostics,
    })
}

impl ContinuousVbgModel {
    pub fn sample(&self, n: usize, seed: u64) -> Result<MixedDataset> {
        let l = cholesky_factor(&self.covariance)?;
        let mut r = rng::stream(seed, "continuous/sample");
        let draws = mvn_sample_factored(&self.mean, &l, n, &mut r);
        let columns = self
            .schema
            .iter()
            .enumerate()
            .map(|(j, s)| {
                if s.is_categorical() {
                    Column::Categorical(draws.iter().map(|row| bracket_values(&self.critical_values[j], row[j])).collect())
                } else {
                    Column::Continuous(draws.iter().map(|row| row[j]).collect())
                }
            })
            .collect();
        MixedDataset::new(self.schema.clone(), columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_binary_threshold_is_zero() {
        assert_eq!(critical_values(0.0, 1.0, &[0.5, 0.5]), vec![0.0]);
    }

    #[test]
    fn threshold_matches_quantile_oracle() {
        let cv = critical_values(0.0, 1.0, &[0.8, 0.2]);
        assert_eq!(cv.len(), 1);
        // Bisection on Φ for 0.8.
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if crate::stats::norm_cdf(mid) < 0.8 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((cv[0] - lo).abs() < 1e-12);
        assert!((cv[0] - 0.8416).abs() < 1e-4);
    }

    #[test]
    fn bracketing_first_modality() {
        assert_eq!(bracket_values(&[0.0], -0.1), 0);
        assert_eq!(bracket_values(&[0.0], 0.0), 0);
        assert_eq!(bracket_values(&[0.0], 0.1), 1);
    }

    #[test]
    fn all_continuous_uses_sample_moments() {
        let data = MixedDataset::new(
            vec![ColumnSchema::continuous("a"), ColumnSchema::continuous("b")],
            vec![
                Column::Continuous(vec![1.0, 2.0, 4.0, 3.0]),
                Column::Continuous(vec![0.0, 1.0, 3.0, 1.5]),
            ],
        )
        .unwrap();
        let m = fit_continuous(&data).unwrap();
        let (mean, cov) = sample_mean_cov(&(0..4).map(|r| data.row(r)).collect::<Vec<_>>(), 2);
        assert_eq!(m.mean, mean);
        assert_eq!(m.covariance, cov);
        assert!(m.critical_values.iter().all(Vec::is_empty));
    }

    #[test]
    fn modality_frequencies() {
        let n = 200;
        let cats: Vec<u32> = (0..n).map(|i| u32::from(i % 5 == 0)).collect();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() + cats[i] as f64).collect();
        let data = MixedDataset::new(
            vec![ColumnSchema::categorical("g", ["a", "b"]), ColumnSchema::continuous("x")],
            vec![Column::Categorical(cats), Column::Continuous(x)],
        )
        .unwrap();
        let m = fit_continuous(&data).unwrap();
        let s = m.sample(10_000, 1).unwrap();
        let p = s.category_proportions(0).unwrap();
        // Binomial sd at n = 1e4 is 0.004.
        assert!((p[0] - 0.8).abs() < 0.02, "{p:?}");
        assert_eq!(s, m.sample(10_000, 1).unwrap());
    }

    #[test]
    fn zero_covariance_is_constant() {
        let m = ContinuousVbgModel {
            schema: vec![ColumnSchema::continuous("a")],
            mean: vec![4.0],
            covariance: CovarianceMatrix::zeros(1),
            critical_values: vec![vec![]],
            category_probs: vec![vec![]],
            diagnostics: vec![],
        };
        let s = m.sample(20, 2).unwrap();
        assert!(s.column(0).numeric().iter().all(|&x| x == 4.0));
    }

    #[test]
    fn singular_covariance_gets_ridge() {
        let a = vec![1.0, 2.0, 3.0, 4.0, 6.0];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        let data = MixedDataset::new(
            vec![ColumnSchema::continuous("a"), ColumnSchema::continuous("b")],
            vec![Column::Continuous(a), Column::Continuous(b)],
        )
        .unwrap();
        let m = fit_continuous(&data).unwrap();
        assert_eq!(m.diagnostics.len(), 1);
        assert!(cholesky_factor(&m.covariance).unwrap().min_diagonal() > 0.0);
    }

    #[test]
    fn needs_more_rows_than_columns() {
        let data = MixedDataset::new(
            vec![ColumnSchema::continuous("a"), ColumnSchema::continuous("b")],
            vec![Column::Continuous(vec![1.0, 2.0]), Column::Continuous(vec![0.0, 1.0])],
        )
        .unwrap();
        assert!(fit_continuous(&data).is_err());
    }
}
