use crate::error::CliResult;
use crate::io;
use crate::Context;
use cohortsim::hiv::synthetic_world;
use cohortsim::rng::{stream_u64, RNG_ALGORITHM};
use cohortsim::synth::pima_like;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthKind {
    /// Pima-style diabetes table.
    Pima,
    /// HIV treatment catalog, baseline cohort and calibration histories.
    Hiv,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub dataset: SynthKind,
    /// Rows of the Pima-style table.
    #[serde(default = "default_rows")]
    pub n: usize,
    #[serde(default = "default_baseline")]
    pub n_baseline: usize,
    #[serde(default = "default_history")]
    pub n_history: usize,
    /// Semesters each history patient is followed.
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

fn default_rows() -> usize {
    392
}
fn default_baseline() -> usize {
    1000
}
fn default_history() -> usize {
    3000
}
fn default_periods() -> usize {
    6
}

pub fn run(cfg: &SynthConfig, ctx: &Context) -> CliResult<Value> {
    let seed = ctx.seed(cfg.seed)?;
    let out = ctx.out_dir(cfg.out_dir.as_deref());
    let outputs = match cfg.dataset {
        SynthKind::Pima => {
            let data = pima_like(cfg.n, stream_u64(seed, "synth"))?;
            vec![
                io::write_dataset(&out, "pima.csv", &data)?,
                io::write_json(&out, "pima_schema.json", &data.schema())?,
            ]
        }
        SynthKind::Hiv => {
            let world = synthetic_world(cfg.n_baseline, cfg.n_history, cfg.periods, stream_u64(seed, "synth"))?;
            vec![
                io::write_json(&out, "catalog.json", &world.catalog)?,
                io::write_dataset(&out, "baseline.csv", &world.baseline)?,
                io::write_dataset(&out, "histories.csv", &world.histories)?,
            ]
        }
    };
    Ok(json!({
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "outputs": super::display(&outputs),
    }))
}
