//! Split → normalize → window → train, shared by the CLI and the sweeps.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::{self, NormalizationParams, PriceSeries, WindowedDataset, DEFAULT_TARGET_RANGE};
use crate::error::{Error, Result};
use crate::network::{MlpNetwork, NetworkTopology};
use crate::train::{self, TrainingConfig, TrainingTrace};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_HORIZON: usize = 60;

/// Everything needed to fit a model to a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub topology: NetworkTopology,
    pub training: TrainingConfig,
    pub train_fraction: f64,
    pub target_range: (f64, f64),
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self {
            topology: NetworkTopology::tuned(),
            training: TrainingConfig::default(),
            train_fraction: DEFAULT_TRAIN_FRACTION,
            target_range: DEFAULT_TARGET_RANGE,
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        if self.topology.output_count() != 1 {
            return Err(Error::InvalidConfig(
                "forecasting networks have exactly one output".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction {} must lie in (0, 1)",
                self.train_fraction
            )));
        }
        let (lo, hi) = self.target_range;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidConfig(format!("target range [{lo}, {hi}] is empty")));
        }
        Ok(())
    }

    pub fn window(&self) -> usize {
        self.topology.input_count()
    }
}

/// Normalization and windowed patterns for the training partition.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub split_index: usize,
    pub params: NormalizationParams,
    pub dataset: WindowedDataset,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
}

/// Splits chronologically and builds training patterns using train-only
/// normalization.
pub fn prepare(series: &PriceSeries, spec: &ModelSpec) -> Result<PreparedData> {
    spec.validate()?;
    let (train, _) = data::chronological_split(series, spec.train_fraction)?;
    let params = data::fit_normalization(&train, spec.target_range.0, spec.target_range.1)?;
    let dataset = data::make_windows(&train, &params, spec.window())?;
    Ok(PreparedData {
        split_index: train.len(),
        params,
        dataset,
        train_start: train.first_date().expect("non-empty after split"),
        train_end: train.last_date().expect("non-empty after split"),
    })
}

#[derive(Debug, Clone)]
pub struct FittedModel {
    pub network: MlpNetwork,
    pub params: NormalizationParams,
    pub trace: TrainingTrace,
    /// Index of the first point after the training partition.
    pub split_index: usize,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
}

/// Seeded initialization followed by training on the training partition.
pub fn fit(series: &PriceSeries, spec: &ModelSpec) -> Result<FittedModel> {
    let prepared = prepare(series, spec)?;
    let network = MlpNetwork::init(&spec.topology, spec.training.seed);
    let (network, trace) = train::train(network, &prepared.dataset, &spec.training)?;
    Ok(FittedModel {
        network,
        params: prepared.params,
        trace,
        split_index: prepared.split_index,
        train_start: prepared.train_start,
        train_end: prepared.train_end,
    })
}
