use crate::dataset::{Column, MixedDataset};
use crate::error::{Error, Result};
use crate::stats::kendall_tau;
use serde::{Deserialize, Serialize};

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS statistic needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::domain("KS statistic on NaN input"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        // Step past every copy of the smallest remaining value in both samples.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample KS statistic of `values` against Uniform(0, 1).
pub fn ks_uniform(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InsufficientData("KS statistic on an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let x = x.clamp(0.0, 1.0);
        d.max(((i + 1) as f64 / n - x).max(x - i as f64 / n))
    }))
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::shape(format!("distributions over {} and {} categories", p.len(), q.len())));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarginalMetric {
    Ks,
    Tv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnFidelity {
    pub name: String,
    pub metric: MarginalMetric,
    pub distance: f64,
}

/// Kendall tau of one column pair in both datasets. Tau is `None` where a
/// column is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFidelity {
    pub first: String,
    pub second: String,
    pub tau_original: Option<f64>,
    pub tau_simulated: Option<f64>,
    pub tau_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub n_original: usize,
    pub n_simulated: usize,
    pub columns: Vec<ColumnFidelity>,
    pub pairs: Vec<PairFidelity>,
    pub max_ks: Option<f64>,
    pub median_ks: Option<f64>,
    pub max_tv: Option<f64>,
    pub max_tau_delta: Option<f64>,
    /// Every marginal distance and every defined tau delta is zero.
    pub identical: bool,
}

impl FidelityReport {
    pub fn column(&self, name: &str) -> Option<&ColumnFidelity> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn pair(&self, a: &str, b: &str) -> Option<&PairFidelity> {
        self.pairs
            .iter()
            .find(|p| (p.first == a && p.second == b) || (p.first == b && p.second == a))
    }
}

fn tau_or_none(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    match kendall_tau(x, y) {
        Ok(t) => Ok(Some(t)),
        Err(Error::UndefinedCorrelation(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Compares marginals column by column and dependence pair by pair.
pub fn fidelity(original: &MixedDataset, simulated: &MixedDataset) -> Result<FidelityReport> {
    if original.schema() != simulated.schema() {
        let a: Vec<&str> = original.schema().iter().map(|s| s.name.as_str()).collect();
        let b: Vec<&str> = simulated.schema().iter().map(|s| s.name.as_str()).collect();
        return Err(Error::Schema(format!("schemas differ: {a:?} vs {b:?}")));
    }
    let numeric_a: Vec<Vec<f64>> = original.columns().iter().map(Column::numeric).collect();
    let numeric_b: Vec<Vec<f64>> = simulated.columns().iter().map(Column::numeric).collect();

    let mut columns = Vec::new();
    for (j, s) in original.schema().iter().enumerate() {
        let (metric, distance) = if s.is_categorical() {
            let tv = total_variation(&original.category_proportions(j)?, &simulated.category_proportions(j)?)?;
            (MarginalMetric::Tv, tv)
        } else {
            (MarginalMetric::Ks, ks_two_sample(&numeric_a[j], &numeric_b[j])?)
        };
        columns.push(ColumnFidelity {
            name: s.name.clone(),
            metric,
            distance,
        });
    }

    let d = original.n_cols();
    let mut pairs = Vec::with_capacity(d * d.saturating_sub(1) / 2);
    for i in 0..d {
        for j in i + 1..d {
            let ta = tau_or_none(&numeric_a[i], &numeric_a[j])?;
            let tb = tau_or_none(&numeric_b[i], &numeric_b[j])?;
            pairs.push(PairFidelity {
                first: original.schema()[i].name.clone(),
                second: original.schema()[j].name.clone(),
                tau_original: ta,
                tau_simulated: tb,
                tau_delta: ta.zip(tb).map(|(a, b)| (a - b).abs()),
            });
        }
    }

    let mut ks: Vec<f64> = columns.iter().filter(|c| c.metric == MarginalMetric::Ks).map(|c| c.distance).collect();
    let max_of = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let max_ks = max_of(&mut ks.iter().copied());
    let max_tv = max_of(&mut columns.iter().filter(|c| c.metric == MarginalMetric::Tv).map(|c| c.distance));
    let max_tau_delta = max_of(&mut pairs.iter().filter_map(|p| p.tau_delta));
    let identical = columns.iter().all(|c| c.distance == 0.0) && max_tau_delta.is_none_or(|t| t == 0.0);
    Ok(FidelityReport {
        n_original: original.n_rows(),
        n_simulated: simulated.n_rows(),
        median_ks: median(&mut ks),
        columns,
        pairs,
        max_ks,
        max_tv,
        max_tau_delta,
        identical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ColumnSchema;
    use crate::rng;
    use crate::synth::pima_like;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn ks_hand_values() {
        assert_eq!(ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 1.0);
        // F_a jumps to 1/2 at 1, F_b to 1/3 at 1.
        let d = ks_two_sample(&[1.0, 5.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((d - (1.0 - 0.5)).abs() < 1e-15, "{d}");
        // Ties across samples must be stepped together.
        assert_eq!(ks_two_sample(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_uniform_grid() {
        let v: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_uniform(&v).unwrap() - 0.005).abs() < 1e-12);
        assert!((ks_uniform(&[0.0; 10]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tv_distance() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!(total_variation(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn self_comparison_is_zero() {
        let d = pima_like(200, 3).unwrap();
        let r = fidelity(&d, &d).unwrap();
        assert!(r.identical);
        assert_eq!(r.pairs.len(), 36);
        assert_eq!(r.max_ks, Some(0.0));
        assert_eq!(r.max_tv, Some(0.0));
        assert_eq!(r.max_tau_delta, Some(0.0));
    }

    #[test]
    fn constant_simulated_column() {
        let mut r = rng::from_seed(4);
        let spread: Vec<f64> = (0..500).map(|_| r.random()).collect();
        let schema = vec![ColumnSchema::continuous("x"), ColumnSchema::continuous("y")];
        let a = MixedDataset::new(schema.clone(), vec![Column::Continuous(spread.clone()), Column::Continuous(spread)]).unwrap();
        let b = MixedDataset::new(schema, vec![Column::Continuous(vec![0.5; 500]), Column::Continuous(vec![0.5; 500])]).unwrap();
        let rep = fidelity(&a, &b).unwrap();
        assert!(rep.column("x").unwrap().distance > 0.45);
        assert_eq!(rep.pair("x", "y").unwrap().tau_simulated, None);
        assert!(!rep.identical);
    }

    #[test]
    fn schema_mismatch() {
        let a = pima_like(50, 1).unwrap();
        let b = a.select_columns(&["AGE", "BMI"]).unwrap();
        assert!(matches!(fidelity(&a, &b), Err(Error::Schema(_))));
    }

    proptest! {
        #[test]
        fn ks_bounds_and_symmetry(a in proptest::collection::vec(-5i32..5, 1..40), b in proptest::collection::vec(-5i32..5, 1..40)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let d = ks_two_sample(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d, ks_two_sample(&b, &a).unwrap());
        }
    }
}
