//! Execution models of the scenario engine and their calibration.

use super::catalog::TreatmentCatalog;
use super::patient::TRANSITION_COLUMNS;
use crate::dataset::{Column, ColumnSchema, MixedDataset};
use crate::error::{Error, Result};
use crate::exec::{fit_constant_markov, fit_multinomial_logit, ConstantMarkovModel, CovariateMarkovModel, LogitOptions};
use serde::{Deserialize, Serialize};

/// Covariates offered to the viral-load model (start-of-period values).
pub const ARN_CANDIDATES: [&str; 9] = ["ARN", "IR", "CONTA", "HEART", "VIHS", "AGE", "SEX", "VIHD", "TREATD"];
/// Covariates offered to the creatinine model; viral load enters at its new value.
pub const CREA_CANDIDATES: [&str; 8] = ["CREA", "SEX", "ARN_NEXT", "AGE", "HEART", "TREATD", "VIHS", "VIHD"];
/// Covariates offered to the treatment-switch model.
pub const SWITCH_CANDIDATES: [&str; 7] = ["TREATD", "ARN_NEXT", "CREA_NEXT", "HEART_NEXT", "DIAB_NEXT", "VIHS_NEXT", "AGE"];

/// Switching behaviour out of one source treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SwitchRow {
    /// Constant probabilities over destination treatments (self = stay).
    Constant { probabilities: Vec<f64> },
    /// Logistic probability of leaving, then a constant destination
    /// distribution that puts zero mass on the source.
    Logistic {
        model: CovariateMarkovModel,
        destinations: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchModel {
    pub treatments: Vec<String>,
    pub rows: Vec<SwitchRow>,
}

impl SwitchModel {
    /// A model in which nobody ever switches.
    pub fn never(treatments: Vec<String>) -> Self {
        let k = treatments.len();
        let rows = (0..k)
            .map(|i| SwitchRow::Constant {
                probabilities: (0..k).map(|j| f64::from(u8::from(i == j))).collect(),
            })
            .collect();
        Self { treatments, rows }
    }

    pub fn validate(&self, catalog: &TreatmentCatalog) -> Result<()> {
        if self.treatments != catalog.names() {
            return Err(Error::config("switch model treatments differ from the catalog"));
        }
        let k = self.treatments.len();
        if self.rows.len() != k {
            return Err(Error::config(format!("switch model needs {k} rows, has {}", self.rows.len())));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let probs = match row {
                SwitchRow::Constant { probabilities } => probabilities,
                SwitchRow::Logistic { model, destinations } => {
                    if model.states.len() != 2 {
                        return Err(Error::config(format!("switch model for '{}' must be binary", self.treatments[i])));
                    }
                    check_covariates(model, &format!("switch model for '{}'", self.treatments[i]))?;
                    if destinations.get(i).copied().unwrap_or(1.0) != 0.0 {
                        return Err(Error::config(format!(
                            "switch destinations for '{}' must exclude the source",
                            self.treatments[i]
                        )));
                    }
                    destinations
                }
            };
            check_distribution(probs, k, &format!("switch row '{}'", self.treatments[i]))?;
        }
        Ok(())
    }
}

fn check_distribution(p: &[f64], k: usize, what: &str) -> Result<()> {
    if p.len() != k || p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::config(format!("{what} must hold {k} nonnegative probabilities")));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::config(format!("{what} must sum to 1")));
    }
    Ok(())
}

fn check_covariates(model: &CovariateMarkovModel, what: &str) -> Result<()> {
    for c in model.covariates() {
        if !TRANSITION_COLUMNS.contains(&c) {
            return Err(Error::config(format!("{what} uses unknown covariate '{c}'")));
        }
    }
    Ok(())
}

/// Complete set of execution models for the scenario engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecModels {
    pub heart: ConstantMarkovModel,
    pub diab: ConstantMarkovModel,
    pub vihs: ConstantMarkovModel,
    /// States "0" (dead) and "1" (alive).
    pub death: ConstantMarkovModel,
    pub arn: CovariateMarkovModel,
    pub crea: CovariateMarkovModel,
    pub switching: SwitchModel,
    #[serde(default)]
    pub diagnostics: Vec<String>,
}

impl ExecModels {
    /// Checks that every model is present with the expected states and
    /// references only known covariates.
    pub fn validate(&self, catalog: &TreatmentCatalog) -> Result<()> {
        let binary = ["0", "1"];
        for (name, m) in [("HEART", &self.heart), ("DIAB", &self.diab), ("VIHS", &self.vihs), ("DEATH", &self.death)] {
            if m.states != binary {
                return Err(Error::config(format!("{name} model must have states [\"0\", \"1\"]")));
            }
            m.validate()?;
        }
        if self.death.row(0)[0] != 1.0 {
            return Err(Error::config("death must be absorbing"));
        }
        if self.arn.states != ["0", "1", "2"] {
            return Err(Error::config("ARN model must have states 0, 1, 2"));
        }
        if self.crea.states != ["1", "2", "3"] {
            return Err(Error::config("CREA model must have states 1, 2, 3"));
        }
        check_covariates(&self.arn, "ARN model")?;
        check_covariates(&self.crea, "CREA model")?;
        if self.crea.covariates().iter().any(|c| c.ends_with("_NEXT") && *c != "ARN_NEXT") {
            return Err(Error::config("CREA model may only use ARN_NEXT among end-of-period values"));
        }
        if self.arn.covariates().iter().any(|c| c.ends_with("_NEXT")) {
            return Err(Error::config("ARN model may only use start-of-period values"));
        }
        self.switching.validate(catalog)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    /// Sources with at least this many observed switches get a logistic model.
    pub min_switches_for_logit: usize,
    pub logit: LogitOptions,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            min_switches_for_logit: 100,
            logit: LogitOptions::default(),
        }
    }
}

fn labels(data: &MixedDataset, name: &str) -> Result<Vec<String>> {
    let j = data.index_of(name)?;
    Ok((0..data.n_rows()).map(|r| data.label(r, j)).collect())
}

fn fit_pairs(data: &MixedDataset, from: &str, to: &str) -> Result<ConstantMarkovModel> {
    let a = labels(data, from)?;
    let b = labels(data, to)?;
    let mut seqs: Vec<Vec<String>> = a.into_iter().zip(b).map(|(x, y)| vec![x, y]).collect();
    // Both states must appear even if one is never observed.
    seqs.push(vec!["0".into()]);
    seqs.push(vec!["1".into()]);
    fit_constant_markov(&seqs)
}

/// Calibrates all execution models from a history table laid out as
/// [`super::patient::history_schema`].
pub fn calibrate(histories: &MixedDataset, catalog: &TreatmentCatalog, opts: &CalibrationOptions) -> Result<ExecModels> {
    let expected = super::patient::history_schema(catalog);
    for s in &expected {
        let j = histories.index_of(&s.name)?;
        if histories.schema()[j] != *s {
            return Err(Error::Schema(format!("history column '{}' does not match the expected layout", s.name)));
        }
    }
    let death_next = histories.index_of("DEATH_NEXT")?;
    let survivors: Vec<usize> = (0..histories.n_rows()).filter(|&r| histories.value(r, death_next) == 1.0).collect();
    if survivors.is_empty() {
        return Err(Error::InsufficientData("no surviving transitions in the history".into()));
    }
    let alive = histories.select_rows(&survivors);
    let mut diagnostics = Vec::new();

    let death = {
        let next = labels(histories, "DEATH_NEXT")?;
        let mut seqs: Vec<Vec<String>> = next.into_iter().map(|n| vec!["1".to_string(), n]).collect();
        seqs.push(vec!["0".into()]);
        fit_constant_markov(&seqs)?
    };
    let heart = fit_pairs(&alive, "HEART", "HEART_NEXT")?;
    let diab = fit_pairs(&alive, "DIAB", "DIAB_NEXT")?;
    let vihs = fit_pairs(&alive, "VIHS", "VIHS_NEXT")?;

    let mut arn = fit_multinomial_logit(&alive, "ARN_NEXT", &ARN_CANDIDATES, &opts.logit)?;
    diagnostics.extend(arn.diagnostics.iter().map(|d| format!("ARN: {d}")));
    arn.states = vec!["0".into(), "1".into(), "2".into()];
    let mut crea = fit_multinomial_logit(&alive, "CREA_NEXT", &CREA_CANDIDATES, &opts.logit)?;
    diagnostics.extend(crea.diagnostics.iter().map(|d| format!("CREA: {d}")));
    crea.states = vec!["1".into(), "2".into(), "3".into()];

    let switching = calibrate_switching(&alive, catalog, opts, &mut diagnostics)?;
    let models = ExecModels {
        heart,
        diab,
        vihs,
        death,
        arn,
        crea,
        switching,
        diagnostics,
    };
    models.validate(catalog)?;
    Ok(models)
}

fn calibrate_switching(
    alive: &MixedDataset,
    catalog: &TreatmentCatalog,
    opts: &CalibrationOptions,
    diagnostics: &mut Vec<String>,
) -> Result<SwitchModel> {
    let k = catalog.len();
    let from = alive.index_of("TREAT")?;
    let to = alive.index_of("TREAT_NEXT")?;
    let mut rows = Vec::with_capacity(k);
    for src in 0..k {
        let idx: Vec<usize> = (0..alive.n_rows()).filter(|&r| alive.value(r, from) as usize == src).collect();
        let mut counts = vec![0usize; k];
        for &r in &idx {
            counts[alive.value(r, to) as usize] += 1;
        }
        let switches = idx.len() - counts[src];
        let name = &catalog.treatments[src].name;
        if switches == 0 {
            diagnostics.push(format!("switching: no observed switches from '{name}'; staying is certain"));
            let mut probabilities = vec![0.0; k];
            probabilities[src] = 1.0;
            rows.push(SwitchRow::Constant { probabilities });
            continue;
        }
        if switches < opts.min_switches_for_logit {
            let n = idx.len() as f64;
            rows.push(SwitchRow::Constant {
                probabilities: counts.iter().map(|&c| c as f64 / n).collect(),
            });
            continue;
        }
        let subset = alive.select_rows(&idx);
        let switched: Vec<u32> = idx.iter().map(|&r| u32::from(alive.value(r, to) as usize != src)).collect();
        let subset = subset.with_column(ColumnSchema::categorical("SWITCH", ["stay", "switch"]), Column::Categorical(switched))?;
        let model = fit_multinomial_logit(&subset, "SWITCH", &SWITCH_CANDIDATES, &opts.logit)?;
        diagnostics.extend(model.diagnostics.iter().map(|d| format!("switching from '{name}': {d}")));
        let mut destinations: Vec<f64> = counts.iter().map(|&c| c as f64 / switches as f64).collect();
        destinations[src] = 0.0;
        rows.push(SwitchRow::Logistic { model, destinations });
    }
    Ok(SwitchModel {
        treatments: catalog.names(),
        rows,
    })
}
