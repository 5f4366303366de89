use crate::error::CliResult;
use crate::io::{self, SchemaSource};
use crate::Context;
use cohortsim::rng::{stream_u64, RNG_ALGORITHM};
use cohortsim::vbg::{GeneratorMethod, GeneratorModel};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub data: PathBuf,
    pub schema: SchemaSource,
    /// Columns to model; defaults to the whole schema.
    #[serde(default)]
    pub columns: Option<Vec<String>>,
    pub method: GeneratorMethod,
    #[serde(default)]
    pub drop_incomplete: bool,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_model_file")]
    pub model_file: String,
}

fn default_model_file() -> String {
    "model.json".into()
}

/// Human-readable fit diagnostics, one line each.
fn diagnostics(model: &GeneratorModel) -> Vec<String> {
    match model {
        GeneratorModel::Discrete(m) => {
            let pooled = m.configurations.iter().filter(|c| c.pooled).count();
            let mut out = vec![format!(
                "{} categorical configurations, {pooled} using the pooled covariance",
                m.configurations.len()
            )];
            out.extend(m.diagnostics.iter().cloned());
            out
        }
        GeneratorModel::Continuous(m) => m.diagnostics.clone(),
        GeneratorModel::Vine(m) => {
            let name = |i: usize| m.schema[i].name.as_str();
            let mut out = Vec::new();
            for (t, tree) in m.trees.iter().enumerate() {
                for e in tree {
                    let given = if e.conditioning.is_empty() {
                        String::new()
                    } else {
                        format!(" | {}", e.conditioning.iter().map(|&c| name(c)).collect::<Vec<_>>().join(","))
                    };
                    out.push(format!(
                        "tree {} {}-{}{given}: {:?} rot {:?} theta {:.4} (tau {:.3})",
                        t + 1,
                        name(e.conditioned[0]),
                        name(e.conditioned[1]),
                        e.copula.family,
                        e.copula.rotation,
                        e.copula.theta,
                        e.tau
                    ));
                }
            }
            out
        }
    }
}

pub fn run(cfg: &FitConfig, ctx: &Context) -> CliResult<Value> {
    let seed = ctx.seed(cfg.seed)?;
    let schema = cfg.schema.load(&ctx.base)?;
    let mut data = io::read_dataset(&ctx.path(&cfg.data), &schema, cfg.drop_incomplete)?;
    if let Some(cols) = &cfg.columns {
        let names: Vec<&str> = cols.iter().map(String::as_str).collect();
        data = data.select_columns(&names)?;
    }
    let model = GeneratorModel::fit(cfg.method, &data, stream_u64(seed, "fit"))?;
    let diags = diagnostics(&model);
    for line in &diags {
        eprintln!("fit: {line}");
    }
    let pair_copulas = match &model {
        GeneratorModel::Vine(m) => m.trees.iter().map(Vec::len).sum(),
        _ => 0,
    };
    let path = io::write_json(&ctx.out_dir(cfg.out_dir.as_deref()), &cfg.model_file, &model)?;
    Ok(json!({
        "seed": seed,
        "rng": RNG_ALGORITHM,
        "method": cfg.method.name(),
        "rows": data.n_rows(),
        "columns": data.n_cols(),
        "pair_copulas": pair_copulas,
        "diagnostics": diags,
        "outputs": super::display(&[path]),
    }))
}
