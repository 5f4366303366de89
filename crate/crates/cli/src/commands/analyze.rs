use crate::error::{CliError, CliResult};
use crate::io::{self, SchemaSource};
use crate::Context;
use cohortsim::analyze::{fidelity, pvalue_experiment, write_pvalue_csv, ExperimentOptions, TTestVariant};
use cohortsim::dataset::ColumnSchema;
use cohortsim::exec::{confusion_matrix, fit_classifier, ClassifierKind, ConfusionMatrix, OutcomeGenerator};
use cohortsim::rng::{stream_u64, RNG_ALGORITHM};
use cohortsim::vbg::GeneratorModel;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::path::PathBuf;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Source data CSV.
    pub original: PathBuf,
    pub schema: SchemaSource,
    /// Generated cohort to compare against the source.
    #[serde(default)]
    pub simulated: Option<PathBuf>,
    /// Columns compared for fidelity; defaults to the simulated file's columns,
    /// taken to be the whole schema.
    #[serde(default)]
    pub fidelity_columns: Option<Vec<String>>,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Fitted generator model (output of `fit`).
    pub generator: PathBuf,
    /// Binary outcome column of the source data.
    pub outcome: String,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierKind,
    /// Classifier features; defaults to every generated covariate.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    /// Perturb predictions with the classifier's confusion matrix.
    #[serde(default = "yes")]
    pub noise: bool,
    #[serde(default = "default_datasets")]
    pub n_datasets: usize,
    #[serde(default = "default_rows")]
    pub n_rows: usize,
    #[serde(default)]
    pub t_test: TTestVariant,
}

fn default_classifier() -> ClassifierKind {
    ClassifierKind::Forest
}
fn yes() -> bool {
    true
}
fn default_datasets() -> usize {
    ExperimentOptions::default().n_datasets
}
fn default_rows() -> usize {
    ExperimentOptions::default().n_rows
}

pub fn run(cfg: &AnalyzeConfig, ctx: &Context) -> CliResult<Value> {
    let seed = ctx.seed(cfg.seed)?;
    let out_dir = ctx.out_dir(cfg.out_dir.as_deref());
    if cfg.simulated.is_none() && cfg.experiment.is_none() {
        return Err(CliError::Config("nothing to do: set `simulated` and/or `experiment`".into()));
    }
    let schema = cfg.schema.load(&ctx.base)?;
    let original = io::read_dataset(&ctx.path(&cfg.original), &schema, false)?;
    let mut summary = Map::new();
    let mut outputs = Vec::new();

    if let Some(sim_path) = &cfg.simulated {
        let columns: Vec<String> = match &cfg.fidelity_columns {
            Some(c) => c.clone(),
            None => schema.iter().map(|s| s.name.clone()).collect(),
        };
        let names: Vec<&str> = columns.iter().map(String::as_str).collect();
        let source = original.select_columns(&names)?;
        let sim_schema: Vec<ColumnSchema> = source.schema().to_vec();
        let simulated = io::read_dataset(&ctx.path(sim_path), &sim_schema, false)?;
        let report = fidelity(&source, &simulated)?;
        summary.insert("identical".into(), json!(report.identical));
        summary.insert("max_ks".into(), json!(report.max_ks));
        summary.insert("max_tv".into(), json!(report.max_tv));
        summary.insert("max_tau_delta".into(), json!(report.max_tau_delta));
        outputs.push(io::write_json(&out_dir, "fidelity.json", &report)?);
    }

    if let Some(exp) = &cfg.experiment {
        let generator: GeneratorModel = io::read_json(&ctx.path(&exp.generator))?;
        let features: Vec<String> = match &exp.features {
            Some(f) => f.clone(),
            None => generator.schema().iter().map(|s| s.name.clone()).filter(|n| n != &exp.outcome).collect(),
        };
        let names: Vec<&str> = features.iter().map(String::as_str).collect();
        let classifier = fit_classifier(exp.classifier, &original, &exp.outcome, &names, stream_u64(seed, "analyze/classifier"))?;
        let noise: ConfusionMatrix = confusion_matrix(&classifier, &original, &exp.outcome)?;
        eprintln!("analyze: classifier training error rate {:.4}", noise.error_rate());
        let outcome_gen = OutcomeGenerator::new(classifier, noise, exp.noise)?;
        let opts = ExperimentOptions {
            n_datasets: exp.n_datasets,
            n_rows: exp.n_rows,
            t_test: exp.t_test,
        };
        let result = pvalue_experiment(&generator, &outcome_gen, &opts, stream_u64(seed, "analyze/experiment"), Some(&original))?;
        let medians: Map<String, Value> = result
            .covariates
            .iter()
            .map(|c| (c.covariate.clone(), json!({"median_p": c.median(), "original_p": c.original})))
            .collect();
        summary.insert("pvalues".into(), Value::Object(medians));
        outputs.push(io::write_json(&out_dir, "outcome_model.json", &outcome_gen)?);
        outputs.push(io::write_json(&out_dir, "pvalues.json", &result)?);
        let mut csv = Vec::new();
        write_pvalue_csv(&result, &mut csv)?;
        outputs.push(io::write_atomic(&out_dir, "pvalues.csv", &csv)?);
    }
    summary.insert("seed".into(), json!(seed));
    summary.insert("rng".into(), json!(RNG_ALGORITHM));
    summary.insert("outputs".into(), json!(super::display(&outputs)));
    Ok(Value::Object(summary))
}
