//! Config loading, input resolution and atomic output files.

use crate::error::{CliError, CliResult};
use cohortsim::dataset::{load_csv, ColumnSchema, LoadOptions, MixedDataset};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Parses a JSON config; relative paths inside it are resolved later against
/// the config's directory.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Directory the config's relative paths are anchored to.
pub fn base_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// A schema given inline or as the path of a JSON file holding the column list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Inline(Vec<ColumnSchema>),
    File(PathBuf),
}

impl SchemaSource {
    pub fn load(&self, base: &Path) -> CliResult<Vec<ColumnSchema>> {
        match self {
            SchemaSource::Inline(s) => Ok(s.clone()),
            SchemaSource::File(p) => read_json(&resolve(base, p)),
        }
    }
}

/// Reads a JSON data artifact (model, catalog, schema file).
pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_dataset(path: &Path, schema: &[ColumnSchema], drop_incomplete: bool) -> CliResult<MixedDataset> {
    load_csv(path, schema, LoadOptions { drop_incomplete }).map_err(|e| match e {
        cohortsim::Error::Io(io) => CliError::Data(format!("{}: {io}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let io_err = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", dir.join(name).display()));
    std::fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    // Temp files are created owner-only; outputs should look like ordinary files.
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(io_err)?;
    }
    tmp.as_file().sync_all().map_err(io_err)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io_err(e.error))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Core(e.into()))?;
    bytes.push(b'\n');
    write_atomic(dir, name, &bytes)
}

pub fn write_dataset(dir: &Path, name: &str, data: &MixedDataset) -> CliResult<PathBuf> {
    let mut bytes = Vec::new();
    cohortsim::dataset::write_csv(data, &mut bytes)?;
    write_atomic(dir, name, &bytes)
}
