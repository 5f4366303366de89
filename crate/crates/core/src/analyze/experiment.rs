use super::association::{association_test, TTestVariant, TestKind};
use crate::dataset::{Column, ColumnSchema, MixedDataset};
use crate::error::{Error, Result};
use crate::exec::OutcomeGenerator;
use crate::rng;
use crate::vbg::GeneratorModel;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentOptions {
    pub n_datasets: usize,
    pub n_rows: usize,
    pub t_test: TTestVariant,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            n_datasets: 100,
            n_rows: 500,
            t_test: TTestVariant::Pooled,
        }
    }
}

/// Replicate p-values of one covariate. A replicate where the test is
/// undefined (a constant column, say) is recorded as `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariatePValues {
    pub covariate: String,
    pub test: TestKind,
    pub original: Option<f64>,
    pub pvalues: Vec<Option<f64>>,
}

impl CovariatePValues {
    pub fn defined(&self) -> Vec<f64> {
        self.pvalues.iter().flatten().copied().collect()
    }

    pub fn median(&self) -> Option<f64> {
        let mut v = self.defined();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
    }

    /// Share of defined replicates with p below `alpha`.
    pub fn rejection_rate(&self, alpha: f64) -> f64 {
        let v = self.defined();
        v.iter().filter(|&&p| p < alpha).count() as f64 / v.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueExperiment {
    pub outcome: String,
    pub n_datasets: usize,
    pub n_rows: usize,
    pub covariates: Vec<CovariatePValues>,
}

impl PValueExperiment {
    pub fn covariate(&self, name: &str) -> Option<&CovariatePValues> {
        self.covariates.iter().find(|c| c.covariate == name)
    }
}

fn test_or_none(data: &MixedDataset, covariate: &str, outcome: &str, variant: TTestVariant) -> Result<Option<f64>> {
    match association_test(data, covariate, outcome, variant) {
        Ok(t) => Ok(Some(t.p_value)),
        Err(Error::UndefinedTest(msg)) => {
            log::debug!("{msg}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Draws `n_datasets` virtual cohorts of `n_rows`, simulates their outcomes and
/// tests every generated covariate against the outcome. When `original` holds
/// the source data (covariates plus outcome) its p-values are reported too.
pub fn pvalue_experiment(
    generator: &GeneratorModel,
    outcome_gen: &OutcomeGenerator,
    opts: &ExperimentOptions,
    seed: u64,
    original: Option<&MixedDataset>,
) -> Result<PValueExperiment> {
    let outcome = outcome_gen.classifier.outcome.clone();
    if outcome_gen.classifier.labels.len() != 2 {
        return Err(Error::Schema(format!("outcome '{outcome}' must be binary")));
    }
    if opts.n_datasets == 0 {
        return Err(Error::config("n_datasets must be positive"));
    }
    // A generator fitted with the outcome column still yields only its covariates here.
    let covariates: Vec<&ColumnSchema> = generator.schema().iter().filter(|s| s.name != outcome).collect();
    let covariate_names: Vec<&str> = covariates.iter().map(|c| c.name.as_str()).collect();
    let outcome_schema = ColumnSchema::categorical(outcome.clone(), outcome_gen.classifier.labels.clone());

    let replicates: Vec<Vec<Option<f64>>> = (0..opts.n_datasets)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::indexed_stream(seed, "analyze/replicate", k);
            let cohort = generator.sample(opts.n_rows, r.random())?;
            let sim = outcome_gen.simulate_dataset(&cohort, r.random())?;
            let cohort = cohort.select_columns(&covariate_names)?;
            let data = cohort.with_column(outcome_schema.clone(), Column::Categorical(sim.labels))?;
            covariates
                .iter()
                .map(|c| test_or_none(&data, &c.name, &outcome, opts.t_test))
                .collect()
        })
        .collect::<Result<_>>()?;

    let covariates = covariates
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let original = match original {
                Some(d) => test_or_none(d, &c.name, &outcome, opts.t_test)?,
                None => None,
            };
            let test = match (c.is_categorical(), opts.t_test) {
                (true, _) => TestKind::ChiSquare,
                (false, TTestVariant::Pooled) => TestKind::StudentT,
                (false, TTestVariant::Welch) => TestKind::WelchT,
            };
            Ok(CovariatePValues {
                covariate: c.name.clone(),
                test,
                original,
                pvalues: replicates.iter().map(|r| r[j]).collect(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(PValueExperiment {
        outcome,
        n_datasets: opts.n_datasets,
        n_rows: opts.n_rows,
        covariates,
    })
}

/// Long-format CSV, one row per covariate and replicate. Undefined tests
/// leave the p-value cell empty.
pub fn write_pvalue_csv<W: Write>(exp: &PValueExperiment, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["covariate", "test", "replicate", "p_value"])?;
    for c in &exp.covariates {
        let test = match c.test {
            TestKind::ChiSquare => "chi-square",
            TestKind::StudentT => "student-t",
            TestKind::WelchT => "welch-t",
        };
        for (k, p) in c.pvalues.iter().enumerate() {
            let p = p.map(|v| format!("{v:e}")).unwrap_or_default();
            w.write_record([c.covariate.as_str(), test, &(k + 1).to_string(), &p])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyze::ks_uniform;
    use crate::exec::{confusion_matrix, fit_classifier, ClassifierKind, ConfusionMatrix};
    use crate::synth::{pima_like, PIMA_COVARIATES, PIMA_OUTCOME};
    use crate::vbg::GeneratorMethod;

    fn setup(method: GeneratorMethod) -> (GeneratorModel, MixedDataset) {
        let data = pima_like(392, 11).unwrap();
        let covs = data.select_columns(&PIMA_COVARIATES).unwrap();
        (GeneratorModel::fit(method, &covs, 1).unwrap(), data)
    }

    #[test]
    fn null_outcome_gives_uniform_pvalues() {
        let (generator, data) = setup(GeneratorMethod::Continuous);
        let clf = fit_classifier(ClassifierKind::Constant, &data, PIMA_OUTCOME, &["AGE"], 0).unwrap();
        // Predicted column "No" redistributes 65/35 regardless of covariates.
        let noise = ConfusionMatrix::new(clf.labels.clone(), vec![vec![65, 0], vec![35, 0]]).unwrap();
        let og = OutcomeGenerator::new(clf, noise, true).unwrap();
        let opts = ExperimentOptions {
            n_datasets: 60,
            n_rows: 200,
            ..Default::default()
        };
        let exp = pvalue_experiment(&generator, &og, &opts, 5, Some(&data)).unwrap();
        assert_eq!(exp.covariates.len(), 8);
        for c in &exp.covariates {
            assert_eq!(c.pvalues.len(), 60);
            let p = c.defined();
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(ks_uniform(&p).unwrap() < 0.2, "{}", c.covariate);
        }
        assert_eq!(exp.covariate("BMI").unwrap().test, TestKind::ChiSquare);
        assert!(exp.covariate("GLUCOSE").unwrap().original.unwrap() < 1e-6);

        let mut buf = Vec::new();
        write_pvalue_csv(&exp, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 8 * 60);
        let again = pvalue_experiment(&generator, &og, &opts, 5, Some(&data)).unwrap();
        assert_eq!(exp, again);
    }

    #[test]
    fn strong_covariate_rejects() {
        let (generator, data) = setup(GeneratorMethod::Continuous);
        let clf = fit_classifier(ClassifierKind::Logistic, &data, PIMA_OUTCOME, &PIMA_COVARIATES, 0).unwrap();
        let noise = confusion_matrix(&clf, &data, PIMA_OUTCOME).unwrap();
        let og = OutcomeGenerator::new(clf, noise, true).unwrap();
        let opts = ExperimentOptions {
            n_datasets: 20,
            ..Default::default()
        };
        let exp = pvalue_experiment(&generator, &og, &opts, 9, None).unwrap();
        let g = exp.covariate("GLUCOSE").unwrap();
        assert!(g.median().unwrap() < 0.05);
        assert!(g.rejection_rate(0.05) > 0.9);
        assert_eq!(g.original, None);
    }
}
