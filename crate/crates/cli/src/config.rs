//! Run configuration: JSON config file, `MTP_SEED`, profiles, and the
//! flag > env > file > default resolution order.

use crate::error::{CliError, CliResult};
use clap::ValueEnum;
use serde::Deserialize;
use std::path::{Path, PathBuf};

pub const SEED_ENV: &str = "MTP_SEED";
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 10000 replicates, tolerance 0.005
    #[default]
    Default,
    /// 2000 replicates, tolerance 0.01
    Ci,
}

impl Profile {
    pub fn replicates(self) -> u64 {
        match self {
            Profile::Default => 10_000,
            Profile::Ci => 2_000,
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Profile::Default => 0.005,
            Profile::Ci => 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Md,
}

/// Keys accepted in a `--config` JSON file. Each mirrors the flag of the
/// same name (dashes become underscores).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub profile: Option<Profile>,
    pub reps: Option<u64>,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub procedure: Option<String>,
    pub sided: Option<String>,
    pub k: Option<u32>,
    pub p0: Option<f64>,
    pub metric: Option<String>,
    pub estimator: Option<String>,
    pub model: Option<String>,
    pub lambda1: Option<f64>,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub model_file: Option<PathBuf>,
    pub means_file: Option<PathBuf>,
    pub n1: Option<u64>,
    pub mu: Option<f64>,
    pub cross_reps: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub nu: Option<f64>,
    pub model_schedule: Option<String>,
    pub beta: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))
    }
}

/// Master seed: `--seed`, then `MTP_SEED`, then the config file.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, file: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    if let Some(raw) = env {
        return raw.trim().parse().map_err(|_| {
            CliError::validation(format!("{SEED_ENV} must be a decimal integer, got '{raw}'"))
        });
    }
    Ok(file.unwrap_or(DEFAULT_SEED))
}

/// Shared settings after merging flags, environment and config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub format: Format,
    pub profile: Profile,
    pub output: Option<PathBuf>,
    pub file: FileConfig,
}

impl Settings {
    pub fn replicates(&self, flag: Option<u64>) -> CliResult<u64> {
        let reps = flag.or(self.file.reps).unwrap_or_else(|| self.profile.replicates());
        if reps == 0 {
            return Err(CliError::validation("reps must be at least 1"));
        }
        Ok(reps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(1), Some("2"), Some(3)).unwrap(), 1);
        assert_eq!(resolve_seed(None, Some(" 2 "), Some(3)).unwrap(), 2);
        assert_eq!(resolve_seed(None, None, Some(3)).unwrap(), 3);
        assert_eq!(resolve_seed(None, None, None).unwrap(), DEFAULT_SEED);
        let err = resolve_seed(None, Some("x"), None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains(SEED_ENV));
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let ok: FileConfig = serde_json::from_str(r#"{"n": 10, "profile": "ci"}"#).unwrap();
        assert_eq!(ok.n, Some(10));
        assert_eq!(ok.profile, Some(Profile::Ci));
        assert!(serde_json::from_str::<FileConfig>(r#"{"nn": 10}"#).is_err());
    }
}
