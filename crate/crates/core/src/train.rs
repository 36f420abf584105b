//! Epoch-based online training.

use serde::{Deserialize, Serialize};

use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::network::{CoefficientSet, MlpNetwork};

pub const DEFAULT_EPOCHS: u64 = 130_000;
pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_LOG_INTERVAL: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Full passes over the training patterns ("cycles").
    pub epochs: u64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Epochs between training-error samples.
    pub log_interval: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: DEFAULT_EPOCHS,
            learning_rate: DEFAULT_LEARNING_RATE,
            momentum: 0.0,
            seed: DEFAULT_SEED,
            log_interval: DEFAULT_LOG_INTERVAL,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum {} must lie in [0, 1)",
                self.momentum
            )));
        }
        if self.log_interval == 0 {
            return Err(Error::InvalidConfig("log interval must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub epoch: u64,
    /// Mean over patterns of `Σ(target − output)²`, normalized units.
    pub mse: f64,
}

/// Training error sampled over epochs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingTrace {
    samples: Vec<TraceSample>,
}

impl TrainingTrace {
    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn first(&self) -> Option<TraceSample> {
        self.samples.first().copied()
    }

    pub fn last(&self) -> Option<TraceSample> {
        self.samples.last().copied()
    }

    fn push(&mut self, sample: TraceSample) {
        debug_assert!(self.samples.last().map_or(true, |s| s.epoch < sample.epoch));
        self.samples.push(sample);
    }

    /// Appends a later segment, skipping samples at or before the current last epoch.
    pub fn extend(&mut self, later: TrainingTrace) {
        let after = self.last().map(|s| s.epoch);
        self.samples.extend(
            later
                .samples
                .into_iter()
                .filter(|s| after.map_or(true, |e| s.epoch > e)),
        );
    }
}

fn check_dataset(network: &MlpNetwork, dataset: &WindowedDataset) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let topology = network.topology();
    if topology.input_count() != dataset.window() {
        return Err(Error::DimensionMismatch {
            what: "dataset window vs network inputs",
            expected: topology.input_count(),
            found: dataset.window(),
        });
    }
    if topology.output_count() != 1 {
        return Err(Error::DimensionMismatch {
            what: "network outputs vs dataset targets",
            expected: 1,
            found: topology.output_count(),
        });
    }
    Ok(())
}

/// Mean squared error of `network` over every pattern, without updating.
pub fn dataset_mse(network: &MlpNetwork, dataset: &WindowedDataset) -> Result<f64> {
    check_dataset(network, dataset)?;
    let mut total = 0.0;
    for p in dataset.patterns() {
        let out = network.predict(&p.inputs)?[0];
        total += (p.target - out) * (p.target - out);
    }
    Ok(total / dataset.len() as f64)
}

/// Network plus momentum state and epoch counter; enough to resume training
/// exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingState {
    pub network: MlpNetwork,
    pub velocity: CoefficientSet,
    pub epochs_completed: u64,
}

impl TrainingState {
    pub fn new(network: MlpNetwork) -> Self {
        let velocity = CoefficientSet::zeros_like(&network);
        Self {
            network,
            velocity,
            epochs_completed: 0,
        }
    }

    /// Runs `epochs` more epochs of per-pattern updates in chronological order.
    ///
    /// Samples the dataset MSE at global epoch 0 (only when starting from
    /// scratch), at every multiple of `log_interval`, and at the last epoch
    /// of this segment.
    pub fn run(&mut self, dataset: &WindowedDataset, config: &TrainingConfig, epochs: u64) -> Result<TrainingTrace> {
        config.validate()?;
        check_dataset(&self.network, dataset)?;
        if !self.network.is_finite() {
            return Err(Error::NonFinite("network coefficients before training".into()));
        }
        let mut trace = TrainingTrace::default();
        if self.epochs_completed == 0 {
            trace.push(TraceSample {
                epoch: 0,
                mse: dataset_mse(&self.network, dataset)?,
            });
        }
        let end = self.epochs_completed + epochs;
        while self.epochs_completed < end {
            for p in dataset.patterns() {
                let err = self.network.backprop_step(
                    &p.inputs,
                    std::slice::from_ref(&p.target),
                    config.learning_rate,
                    config.momentum,
                    &mut self.velocity,
                )?;
                if !err.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "training error at epoch {}",
                        self.epochs_completed + 1
                    )));
                }
            }
            self.epochs_completed += 1;
            let epoch = self.epochs_completed;
            if epoch % config.log_interval == 0 || epoch == end {
                if !self.network.is_finite() {
                    return Err(Error::NonFinite(format!("network coefficients after epoch {epoch}")));
                }
                trace.push(TraceSample {
                    epoch,
                    mse: dataset_mse(&self.network, dataset)?,
                });
            }
        }
        Ok(trace)
    }
}

/// Trains for `config.epochs` epochs and returns the network with its error trace.
pub fn train(
    network: MlpNetwork,
    dataset: &WindowedDataset,
    config: &TrainingConfig,
) -> Result<(MlpNetwork, TrainingTrace)> {
    let mut state = TrainingState::new(network);
    let trace = state.run(dataset, config, config.epochs)?;
    Ok((state.network, trace))
}
