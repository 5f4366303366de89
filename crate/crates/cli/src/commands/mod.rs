pub mod analyze;
pub mod fit;
pub mod generate;
pub mod simulate;
pub mod synth;

use std::path::Path;

pub(crate) fn display(paths: &[impl AsRef<Path>]) -> Vec<String> {
    paths.iter().map(|p| p.as_ref().display().to_string()).collect()
}
