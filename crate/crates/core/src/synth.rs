//! Synthetic stand-ins for the public datasets used in examples and tests.

use crate::dataset::{Column, ColumnSchema, MixedDataset, ThresholdDiscretizer};
use crate::error::Result;
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal};

/// Covariate names of [`pima_like`], in column order.
pub const PIMA_COVARIATES: [&str; 8] = ["PREGNANT", "BMI", "GLUCOSE", "PRESSURE", "TRICEPS", "INSULIN", "PEDIGREE", "AGE"];
/// Outcome column of [`pima_like`].
pub const PIMA_OUTCOME: &str = "DIABETES";

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A Pima-style diabetes table: two categorical and six continuous
/// covariates plus a binary outcome. Glucose and insulin drive the outcome
/// strongly, blood pressure moderately, pregnancy only through age.
pub fn pima_like(n: usize, seed: u64) -> Result<MixedDataset> {
    let mut r = rng::stream(seed, "synth/pima");
    let bmi_cut = ThresholdDiscretizer::body_mass_index();
    let std = Normal::<f64>::new(0.0, 1.0).unwrap();
    let age_extra = Gamma::<f64>::new(2.0, 5.0).unwrap();
    let pedigree = LogNormal::<f64>::new(-0.9, 0.55).unwrap();
    let mut cols: [Vec<f64>; 9] = Default::default();
    for _ in 0..n {
        let age = (21.0 + age_extra.sample(&mut r)).min(81.0).round();
        let pregnant = f64::from(u8::from(r.random::<f64>() < logistic(-0.4 + 0.12 * (age - 24.0))));
        let glucose = (120.0 + 30.0 * std.sample(&mut r) + 0.4 * (age - 31.0)).clamp(56.0, 198.0).round();
        let bmi = 33.0 + 6.5 * std.sample(&mut r) + 0.04 * (glucose - 120.0);
        let log_insulin = 4.8 + 0.012 * (glucose - 120.0) + 0.015 * (bmi - 33.0) + 0.5 * std.sample(&mut r);
        let insulin = log_insulin.exp().clamp(14.0, 846.0).round();
        let triceps = (29.0 + 0.9 * (bmi - 33.0) + 7.0 * std.sample(&mut r)).clamp(7.0, 63.0).round();
        let pressure = (70.0 + 0.3 * (age - 31.0) + 0.3 * (bmi - 33.0) + 11.0 * std.sample(&mut r)).clamp(24.0, 110.0).round();
        let ped = (pedigree.sample(&mut r) * 1000.0).round() / 1000.0;
        let eta = -1.0 + 0.035 * (glucose - 120.0) + 1.2 * (log_insulin - 4.8) + 0.06 * (pressure - 70.0) + 0.03 * (age - 31.0) + 0.8 * (ped - 0.47);
        let diabetes = f64::from(u8::from(r.random::<f64>() < logistic(eta)));
        let bmi_class = bmi_cut.interval_index(bmi)? as f64;
        for (c, v) in cols.iter_mut().zip([pregnant, bmi_class, glucose, pressure, triceps, insulin, ped, age, diabetes]) {
            c.push(v);
        }
    }
    let schema = vec![
        ColumnSchema::categorical("PREGNANT", ["No", "Yes"]),
        ColumnSchema::categorical("BMI", bmi_cut.labels().to_vec()),
        ColumnSchema::continuous("GLUCOSE"),
        ColumnSchema::continuous("PRESSURE"),
        ColumnSchema::continuous("TRICEPS"),
        ColumnSchema::continuous("INSULIN"),
        ColumnSchema::continuous("PEDIGREE"),
        ColumnSchema::continuous("AGE"),
        ColumnSchema::categorical(PIMA_OUTCOME, ["No", "Yes"]),
    ];
    let columns = schema
        .iter()
        .zip(cols)
        .map(|(s, c)| {
            if s.is_categorical() {
                Column::Categorical(c.into_iter().map(|v| v as u32).collect())
            } else {
                Column::Continuous(c)
            }
        })
        .collect();
    MixedDataset::new(schema, columns)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = pima_like(392, 1).unwrap();
        assert_eq!(a.n_rows(), 392);
        assert_eq!(a.n_cols(), 9);
        assert_eq!(a.select_columns(&PIMA_COVARIATES).unwrap().n_cols(), 8);
        assert_eq!(a, pima_like(392, 1).unwrap());
        assert_ne!(a, pima_like(392, 2).unwrap());
        let prevalence = a.category_proportions(8).unwrap()[1];
        assert!(prevalence > 0.2 && prevalence < 0.6, "{prevalence}");
        for p in a.category_proportions(1).unwrap() {
            assert!(p > 0.05);
        }
    }

    #[test]
    fn pressure_is_significant_on_source_sized_data() {
        for seed in 0..5 {
            let d = pima_like(392, seed).unwrap();
            let p = crate::analyze::association_pvalue(&d, "PRESSURE", PIMA_OUTCOME).unwrap();
            assert!(p < 1e-3, "seed {seed}: p = {p}");
        }
    }
}
