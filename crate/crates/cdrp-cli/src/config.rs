//! Structured run configuration: one TOML file per command with the same
//! keys as the flags; flags override file values. Unknown keys are
//! rejected so archived configs stay trustworthy.

use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: Option<String>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// Workload multiplier for replica/sample counts; statistics stay
    /// deterministic per seed at any scale, pass flags are meaningful at
    /// scale 1.
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolymerConfig {
    pub n: Option<usize>,
    pub kappa: Option<f64>,
    pub kappas: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub kind: Option<String>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub experiment: Option<String>,
    pub k_values: Option<Vec<f64>>,
    pub offsets: Option<Vec<f64>>,
    pub gaps: Option<Vec<f64>>,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

/// Default output directory: `--out` flag, else the `CDRP_OUT`
/// environment variable, else the current directory.
pub fn resolve_out(flag: Option<PathBuf>, cfg: Option<PathBuf>) -> PathBuf {
    flag.or(cfg)
        .or_else(|| std::env::var_os("CDRP_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
