//! Optional TOML config file mirroring the CLI flags.
//!
//! Precedence: an explicit command-line flag wins over the file, the file
//! wins over built-in defaults.

use anyhow::{Context, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Keys a config file may set. Every field is optional; unset keys fall
/// through to defaults.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dataset: Option<String>,
    pub model: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub metric: Option<String>,
    pub steps: Option<usize>,
    pub ranking: Option<String>,
    pub score: Option<String>,
    pub seed: Option<u64>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub limit: Option<usize>,
    pub split: Option<String>,
}

/// Parse a config file.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Load the config named by the flag, or an empty one.
pub fn load_optional(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(FileConfig::default()),
    }
}

/// Flag value if given, else the file value, else the default.
pub fn resolve<T: Clone>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

/// Flag value if given, else the file value.
pub fn resolve_opt<T: Clone>(cli: Option<T>, file: Option<T>) -> Option<T> {
    cli.or(file)
}
