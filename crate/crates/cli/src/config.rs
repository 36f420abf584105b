//! Run configuration: TOML file values, overridden by command-line flags,
//! falling back to the tuned model's defaults.

use std::path::Path;

use anyhow::{bail, Context};
use mlpcast::pipeline::{DEFAULT_HORIZON, DEFAULT_TRAIN_FRACTION};
use mlpcast::train::DEFAULT_SEED;
use mlpcast::{ExperimentBase, ModelSpec, NetworkTopology, PredictionMode, TrainingConfig};
use serde::Deserialize;

/// Environment variable that replaces the built-in default seed.
pub const SEED_ENV: &str = "MLPCAST_SEED";

/// Every field optional; anything absent falls through to flags or defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub topology: Option<String>,
    pub epochs: Option<u64>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub seed: Option<u64>,
    pub log_interval: Option<u64>,
    pub train_fraction: Option<f64>,
    pub horizon: Option<usize>,
    pub mode: Option<String>,
    pub target_range: Option<(f64, f64)>,
    /// Sweep points (hidden widths or training fractions).
    pub values: Option<Vec<f64>>,
    /// Length of the training-error trace.
    pub max_epochs: Option<u64>,
}

impl RunConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfigFile) -> RunConfigFile {
        RunConfigFile {
            topology: over.topology.or(self.topology),
            epochs: over.epochs.or(self.epochs),
            learning_rate: over.learning_rate.or(self.learning_rate),
            momentum: over.momentum.or(self.momentum),
            seed: over.seed.or(self.seed),
            log_interval: over.log_interval.or(self.log_interval),
            train_fraction: over.train_fraction.or(self.train_fraction),
            horizon: over.horizon.or(self.horizon),
            mode: over.mode.or(self.mode),
            target_range: over.target_range.or(self.target_range),
            values: over.values.or(self.values),
            max_epochs: over.max_epochs.or(self.max_epochs),
        }
    }
}

/// Fully resolved and validated settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub horizon: usize,
    pub mode: PredictionMode,
    /// `flag`, `config`, `env:MLPCAST_SEED`, or `default`.
    pub seed_source: String,
}

impl RunConfig {
    /// `file` holds config-file values, `flags` the command-line ones.
    pub fn resolve(file: RunConfigFile, flags: RunConfigFile, env_seed: Option<String>) -> anyhow::Result<Self> {
        let (seed, seed_source) = match (flags.seed, file.seed, env_seed) {
            (Some(s), _, _) => (s, "flag".to_string()),
            (None, Some(s), _) => (s, "config".to_string()),
            (None, None, Some(raw)) => {
                let s = raw
                    .trim()
                    .parse()
                    .with_context(|| format!("{SEED_ENV}={raw:?} is not an unsigned integer"))?;
                (s, format!("env:{SEED_ENV}"))
            }
            (None, None, None) => (DEFAULT_SEED, "default".to_string()),
        };
        let merged = file.overlay(flags);
        let defaults = TrainingConfig::default();
        let topology = match &merged.topology {
            Some(t) => t.parse::<NetworkTopology>()?,
            None => NetworkTopology::tuned(),
        };
        let model = ModelSpec {
            topology,
            training: TrainingConfig {
                epochs: merged.epochs.unwrap_or(defaults.epochs),
                learning_rate: merged.learning_rate.unwrap_or(defaults.learning_rate),
                momentum: merged.momentum.unwrap_or(defaults.momentum),
                seed,
                log_interval: merged.log_interval.unwrap_or(defaults.log_interval),
            },
            train_fraction: merged.train_fraction.unwrap_or(DEFAULT_TRAIN_FRACTION),
            target_range: merged.target_range.unwrap_or(mlpcast::data::DEFAULT_TARGET_RANGE),
        };
        model.validate()?;
        let horizon = merged.horizon.unwrap_or(DEFAULT_HORIZON);
        if horizon == 0 {
            bail!("horizon must be at least 1");
        }
        let mode = match &merged.mode {
            Some(m) => m.parse()?,
            None => PredictionMode::WalkForward,
        };
        Ok(Self {
            model,
            horizon,
            mode,
            seed_source,
        })
    }

    pub fn experiment_base(&self) -> ExperimentBase {
        ExperimentBase {
            model: self.model.clone(),
            horizon: self.horizon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_tuned_model() {
        let c = RunConfig::resolve(RunConfigFile::default(), RunConfigFile::default(), None).unwrap();
        assert_eq!(c.model.topology.to_string(), "5:21:21:1");
        assert_eq!(c.model.train_fraction, 0.8);
        assert_eq!(c.model.training.epochs, 130_000);
        assert_eq!(c.horizon, 60);
        assert_eq!(c.mode, PredictionMode::WalkForward);
        assert_eq!(c.seed_source, "default");
    }

    #[test]
    fn flags_override_file() {
        let file: RunConfigFile = toml::from_str("epochs = 10\nseed = 3\ntopology = \"5:11:11:1\"").unwrap();
        let flags = RunConfigFile {
            epochs: Some(20),
            ..Default::default()
        };
        let c = RunConfig::resolve(file, flags, Some("99".into())).unwrap();
        assert_eq!(c.model.training.epochs, 20);
        assert_eq!(c.model.training.seed, 3);
        assert_eq!(c.seed_source, "config");
        assert_eq!(c.model.topology, NetworkTopology::baseline());
    }

    #[test]
    fn env_seed_replaces_default_only() {
        let c = RunConfig::resolve(RunConfigFile::default(), RunConfigFile::default(), Some("7".into())).unwrap();
        assert_eq!(c.model.training.seed, 7);
        assert_eq!(c.seed_source, "env:MLPCAST_SEED");
        assert!(RunConfig::resolve(RunConfigFile::default(), RunConfigFile::default(), Some("x".into())).is_err());
    }

    #[test]
    fn invalid_values_rejected_up_front() {
        let bad = |toml_src: &str| {
            let file: RunConfigFile = toml::from_str(toml_src).unwrap();
            RunConfig::resolve(file, RunConfigFile::default(), None).is_err()
        };
        assert!(bad("momentum = 1.0"));
        assert!(bad("learning_rate = 0.0"));
        assert!(bad("train_fraction = 1.5"));
        assert!(bad("horizon = 0"));
        assert!(bad("mode = \"sideways\""));
        assert!(bad("topology = \"5:0:1\""));
        assert!(toml::from_str::<RunConfigFile>("epoch = 3").is_err());
    }
}
