use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "STOCHMEM_OUT_DIR";

/// Settings for `simulate`, as read from a TOML file. Every field is
/// optional; command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: Option<String>,
    pub epsilon: Option<f64>,
    pub threshold: Option<f64>,
    pub k_eps: Option<f64>,
    pub strategy: Option<String>,
    pub adversary: Option<String>,
    pub horizon: Option<usize>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub checkpoints: Option<Vec<usize>>,
    pub workers: Option<usize>,
    pub tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    /// Fields set in `flags` replace the ones in `self`.
    pub fn overridden_by(self, flags: ExperimentConfig) -> Self {
        ExperimentConfig {
            game: flags.game.or(self.game),
            epsilon: flags.epsilon.or(self.epsilon),
            threshold: flags.threshold.or(self.threshold),
            k_eps: flags.k_eps.or(self.k_eps),
            strategy: flags.strategy.or(self.strategy),
            adversary: flags.adversary.or(self.adversary),
            horizon: flags.horizon.or(self.horizon),
            replications: flags.replications.or(self.replications),
            seed: flags.seed.or(self.seed),
            checkpoints: flags.checkpoints.or(self.checkpoints),
            workers: flags.workers.or(self.workers),
            tol: flags.tol.or(self.tol),
            out_dir: flags.out_dir.or(self.out_dir),
        }
    }
}

/// Output directory: explicit value, else the environment variable, else `out`.
pub fn resolve_out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn require<T>(value: Option<T>, name: &str) -> Result<T> {
    match value {
        Some(v) => Ok(v),
        None => bail!("missing required setting `{name}` (flag or config file)"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: ExperimentConfig = toml::from_str("epsilon = 0.1\nhorizon = 50\n").unwrap();
        let flags = ExperimentConfig {
            horizon: Some(70),
            ..Default::default()
        };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.epsilon, Some(0.1));
        assert_eq!(merged.horizon, Some(70));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("epsilonn = 0.1\n").is_err());
    }
}
