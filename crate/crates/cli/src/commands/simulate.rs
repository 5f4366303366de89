use crate::error::{CliError, CliResult};
use crate::io;
use crate::Context;
use cohortsim::hiv::{
    baseline_schema, calibrate, desk_catalog, history_schema, patients_from_dataset, summarize, CalibrationOptions, Engine, ExecModels,
    RunResult, ScenarioConfig, ScenarioSummary, TreatmentCatalog,
};
use cohortsim::rng::RNG_ALGORITHM;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Treatment catalog JSON; the built-in ten-treatment desk catalog when absent.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    /// Baseline cohort CSV.
    pub baseline: PathBuf,
    /// Pre-calibrated execution models. Exactly one of `models` and `histories`.
    #[serde(default)]
    pub models: Option<PathBuf>,
    /// Patient-period histories to calibrate the execution models from.
    #[serde(default)]
    pub histories: Option<PathBuf>,
    #[serde(default)]
    pub calibration: CalibrationOptions,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    /// Penetration rates to sweep; `scenario.penrate` alone when absent.
    #[serde(default)]
    pub penrates: Option<Vec<f64>>,
    /// Runs whose per-patient DC/FD/NDC go to the patient CSV.
    #[serde(default = "one")]
    pub per_patient_runs: usize,
    /// Keep full trajectories to count generic-to-branded reversions.
    #[serde(default)]
    pub check_trajectories: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn one() -> usize {
    1
}

/// Run-level aggregates written to the results file.
#[derive(Debug, Serialize)]
struct RunRecord {
    run: usize,
    total_dc: f64,
    total_dc_scaled: f64,
    mean_ndc: f64,
    ever_generic_fraction: f64,
    generic_uptake_by_period: Vec<f64>,
    n_patients: usize,
    n_deaths: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    generic_reversions: Option<usize>,
}

#[derive(Debug, Serialize)]
struct ScenarioResults<'a> {
    rng: &'static str,
    seed: u64,
    scenario: &'a ScenarioConfig,
    summary: &'a ScenarioSummary,
    runs: Vec<RunRecord>,
}

/// File-name tag for a rate: 0.1 -> "10", 0.125 -> "12.5".
fn rate_tag(rate: f64) -> String {
    let pct = (rate * 100.0 * 1e6).round() / 1e6;
    format!("{pct}")
}

fn patient_csv(results: &[(RunResult, Option<usize>)], runs: usize) -> String {
    let mut out = String::from("run,patient,dc,fd,ndc\n");
    for (r, _) in results.iter().take(runs) {
        for i in 0..r.dc.len() {
            let _ = writeln!(out, "{},{},{:e},{},{:e}", r.run + 1, i + 1, r.dc[i], r.fd[i], r.ndc[i]);
        }
    }
    out
}

pub fn run(cfg: &SimulateConfig, ctx: &Context) -> CliResult<Value> {
    let seed = ctx.seed(cfg.seed)?;
    let out_dir = ctx.out_dir(cfg.out_dir.as_deref());
    cfg.scenario.validate()?;
    if cfg.scenario.n_runs < 20 {
        return Err(CliError::Config("scenario.n_runs must be at least 20 to report prediction intervals".into()));
    }
    let rates = cfg.penrates.clone().unwrap_or_else(|| vec![cfg.scenario.penrate]);
    if rates.is_empty() {
        return Err(CliError::Config("`penrates` must not be empty".into()));
    }
    let catalog: TreatmentCatalog = match &cfg.catalog {
        Some(p) => io::read_json(&ctx.path(p))?,
        None => desk_catalog(),
    };
    catalog.validate()?;

    let mut outputs = Vec::new();
    let models: ExecModels = match (&cfg.models, &cfg.histories) {
        (Some(m), None) => io::read_json(&ctx.path(m))?,
        (None, Some(h)) => {
            let histories = io::read_dataset(&ctx.path(h), &history_schema(&catalog), false)?;
            let models = calibrate(&histories, &catalog, &cfg.calibration)?;
            for d in &models.diagnostics {
                eprintln!("calibrate: {d}");
            }
            outputs.push(io::write_json(&out_dir, "models.json", &models)?);
            models
        }
        _ => return Err(CliError::Config("set exactly one of `models` and `histories`".into())),
    };
    let baseline_data = io::read_dataset(&ctx.path(&cfg.baseline), &baseline_schema(&catalog), false)?;
    let baseline = patients_from_dataset(&baseline_data, &catalog, cfg.scenario.invert_ir)?;

    let mut sweep = Vec::new();
    for &rate in &rates {
        let scenario = ScenarioConfig {
            penrate: rate,
            ..cfg.scenario.clone()
        };
        scenario.validate()?;
        let engine = Engine::new(&catalog, &models, &scenario)?;
        let results: Vec<(RunResult, Option<usize>)> = (0..scenario.n_runs)
            .into_par_iter()
            .map(|k| {
                let (r, log) = engine.run(&baseline, seed, k, cfg.check_trajectories)?;
                Ok((r, log.map(|l| l.generic_reversions())))
            })
            .collect::<cohortsim::Result<_>>()?;
        let run_results: Vec<RunResult> = results.iter().map(|(r, _)| r.clone()).collect();
        let summary = summarize(rate, &run_results)?;
        let reversions: Option<usize> = cfg.check_trajectories.then(|| results.iter().filter_map(|(_, v)| *v).sum());
        let file = ScenarioResults {
            rng: RNG_ALGORITHM,
            seed,
            scenario: &scenario,
            summary: &summary,
            runs: results
                .iter()
                .map(|(r, rev)| RunRecord {
                    run: r.run + 1,
                    total_dc: r.total_dc,
                    total_dc_scaled: r.total_dc_scaled,
                    mean_ndc: r.mean_ndc,
                    ever_generic_fraction: r.ever_generic_fraction,
                    generic_uptake_by_period: r.generic_uptake_by_period.clone(),
                    n_patients: r.n_patients,
                    n_deaths: r.n_deaths,
                    generic_reversions: *rev,
                })
                .collect(),
        };
        let tag = rate_tag(rate);
        outputs.push(io::write_json(&out_dir, &format!("results_penrate_{tag}.json"), &file)?);
        let csv = patient_csv(&results, cfg.per_patient_runs);
        outputs.push(io::write_atomic(&out_dir, &format!("patients_penrate_{tag}.csv"), csv.as_bytes())?);
        sweep.push(json!({
            "penrate": rate,
            "median_total_dc_scaled": summary.total_dc_scaled.median,
            "pi90_total_dc_scaled": summary.total_dc_scaled.pi90,
            "generic_reversions": reversions,
        }));
    }
    Ok(json!({
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "n_runs": cfg.scenario.n_runs,
        "sweep": sweep,
        "outputs": super::display(&outputs),
    }))
}

#[cfg(test)]
mod tests {
    use super::rate_tag;

    #[test]
    fn rate_tags() {
        assert_eq!(rate_tag(0.1), "10");
        assert_eq!(rate_tag(0.55), "55");
        assert_eq!(rate_tag(0.125), "12.5");
        assert_eq!(rate_tag(0.0), "0");
    }
}
