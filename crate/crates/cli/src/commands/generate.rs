use crate::error::CliResult;
use crate::io;
use crate::Context;
use cohortsim::rng::{stream_u64, RNG_ALGORITHM};
use cohortsim::vbg::GeneratorModel;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub model: PathBuf,
    pub n: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_file: String,
}

fn default_output() -> String {
    "cohort.csv".into()
}

pub fn run(cfg: &GenerateConfig, ctx: &Context) -> CliResult<Value> {
    let seed = ctx.seed(cfg.seed)?;
    let model: GeneratorModel = io::read_json(&ctx.path(&cfg.model))?;
    let cohort = model.sample(cfg.n, stream_u64(seed, "generate"))?;
    let path = io::write_dataset(&ctx.out_dir(cfg.out_dir.as_deref()), &cfg.output_file, &cohort)?;
    Ok(json!({
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "method": model.method().name(),
        "rows": cohort.n_rows(),
        "outputs": super::display(&[path]),
    }))
}
