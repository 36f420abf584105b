//! The tuning experiments: hidden-width sweep, training-volume sweep,
//! training-error trace, and scoring of externally produced predictions.
//!
//! Every sweep point re-initializes from the same seed, so the swept value
//! is the only thing that differs between rows. Points run in parallel;
//! rows come back in the order the values were given.

use std::collections::HashMap;
use std::io::Read;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    csv_reader, expect_header, parse_date, parse_decimal, NormalizationParams, PriceSeries, WindowedDataset,
};
use crate::error::{Error, Result};
use crate::eval::{self, PredictionRecord};
use crate::network::{MlpNetwork, NetworkTopology};
use crate::pipeline::{self, ModelSpec};
use crate::train::{TrainingConfig, TrainingState, TrainingTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    /// Width of both hidden layers.
    HiddenNeurons,
    /// Fraction of the series used for training.
    TrainFraction,
    /// Training length in epochs.
    Epochs,
}

/// Shared settings for every point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentBase {
    pub model: ModelSpec,
    pub horizon: usize,
}

impl Default for ExperimentBase {
    fn default() -> Self {
        Self {
            model: ModelSpec::default(),
            horizon: pipeline::DEFAULT_HORIZON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ExperimentBase,
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.model.validate()?;
        if self.base.horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        if self.values.is_empty() {
            return Err(Error::InvalidConfig("sweep has no values".into()));
        }
        for &v in &self.values {
            let ok = match self.variable {
                SweepVariable::HiddenNeurons => v >= 1.0 && v.fract() == 0.0,
                SweepVariable::TrainFraction => v > 0.0 && v < 1.0,
                SweepVariable::Epochs => v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64,
            };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "{v} is not a legal value for {:?}",
                    self.variable
                )));
            }
        }
        Ok(())
    }

    /// The model configuration used for one sweep value.
    pub fn model_for(&self, value: f64) -> Result<ModelSpec> {
        let mut model = self.base.model.clone();
        match self.variable {
            SweepVariable::HiddenNeurons => {
                model.topology = NetworkTopology::two_hidden(model.topology.input_count(), value as usize)?;
            }
            SweepVariable::TrainFraction => model.train_fraction = value,
            SweepVariable::Epochs => model.training.epochs = value as u64,
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub mape: f64,
    pub rmse: f64,
    pub train_mse_final: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

/// Fits one configuration and scores the `horizon` walk-forward predictions
/// that follow the training boundary.
pub fn evaluate_point(series: &PriceSeries, model: &ModelSpec, horizon: usize) -> Result<SweepRow> {
    let split = crate::data::split_index(series.len(), model.train_fraction)?;
    if split + horizon > series.len() {
        return Err(Error::HorizonOverrun {
            start: split,
            horizon,
            len: series.len(),
            max: series.len() - split,
        });
    }
    let fitted = pipeline::fit(series, model)?;
    let records = eval::predict_walk_forward(&fitted.network, &fitted.params, series, fitted.split_index, horizon)?;
    Ok(SweepRow {
        value: f64::NAN,
        mape: eval::mape(&records)?,
        rmse: eval::rmse(&records)?,
        train_mse_final: fitted.trace.last().map_or(f64::NAN, |s| s.mse),
        seed: model.training.seed,
    })
}

pub fn run_sweep(series: &PriceSeries, spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let rows = spec
        .values
        .par_iter()
        .map(|&value| {
            let model = spec.model_for(value)?;
            let row = evaluate_point(series, &model, spec.base.horizon)?;
            Ok(SweepRow { value, ..row })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        spec: spec.clone(),
        rows,
    })
}

/// Both hidden layers set to each count in turn.
pub fn sweep_hidden_neurons(series: &PriceSeries, base: &ExperimentBase, counts: &[usize]) -> Result<SweepResult> {
    run_sweep(
        series,
        &SweepSpec {
            base: base.clone(),
            variable: SweepVariable::HiddenNeurons,
            values: counts.iter().map(|&c| c as f64).collect(),
        },
    )
}

/// Training partition grown from the fixed start date; each point re-fits
/// normalization on its own slice.
pub fn sweep_training_volume(series: &PriceSeries, base: &ExperimentBase, fractions: &[f64]) -> Result<SweepResult> {
    run_sweep(
        series,
        &SweepSpec {
            base: base.clone(),
            variable: SweepVariable::TrainFraction,
            values: fractions.to_vec(),
        },
    )
}

/// Resumable single training run logging the error curve.
#[derive(Debug, Clone)]
pub struct TraceExperiment {
    pub params: NormalizationParams,
    pub config: TrainingConfig,
    pub state: TrainingState,
    dataset: WindowedDataset,
}

/// Serializable snapshot of a [`TraceExperiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: NormalizationParams,
    pub config: TrainingConfig,
    pub state: TrainingState,
}

impl TraceExperiment {
    pub fn new(series: &PriceSeries, model: &ModelSpec) -> Result<Self> {
        let prepared = pipeline::prepare(series, model)?;
        let network = MlpNetwork::init(&model.topology, model.training.seed);
        Ok(Self {
            params: prepared.params,
            config: model.training,
            state: TrainingState::new(network),
            dataset: prepared.dataset,
        })
    }

    /// Rebuilds the dataset from `series` and continues from `checkpoint`.
    pub fn resume(series: &PriceSeries, model: &ModelSpec, checkpoint: Checkpoint) -> Result<Self> {
        let prepared = pipeline::prepare(series, model)?;
        if prepared.params != checkpoint.params {
            return Err(Error::InvalidConfig(
                "checkpoint normalization does not match this series and split".into(),
            ));
        }
        if checkpoint.state.network.topology() != &model.topology {
            return Err(Error::InvalidConfig(format!(
                "checkpoint topology {} differs from {}",
                checkpoint.state.network.topology(),
                model.topology
            )));
        }
        Ok(Self {
            params: checkpoint.params,
            config: checkpoint.config,
            state: checkpoint.state,
            dataset: prepared.dataset,
        })
    }

    pub fn epochs_completed(&self) -> u64 {
        self.state.epochs_completed
    }

    pub fn advance(&mut self, epochs: u64) -> Result<TrainingTrace> {
        self.state.run(&self.dataset, &self.config, epochs)
    }

    /// Trains until `epochs_completed` reaches `target`.
    pub fn advance_to(&mut self, target: u64) -> Result<TrainingTrace> {
        let remaining = target.saturating_sub(self.state.epochs_completed);
        self.advance(remaining)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params,
            config: self.config,
            state: self.state.clone(),
        }
    }
}

/// Training error every `log_interval` epochs from 0 to `max_epochs`.
pub fn trace_training_error(
    series: &PriceSeries,
    model: &ModelSpec,
    max_epochs: u64,
    log_interval: u64,
) -> Result<TrainingTrace> {
    let mut model = model.clone();
    model.training.log_interval = log_interval;
    let mut run = TraceExperiment::new(series, &model)?;
    run.advance(max_epochs)
}

/// Predictions from another tool, keyed by date.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolPredictions {
    pub name: String,
    pub predictions: Vec<(NaiveDate, f64)>,
}

#[derive(Debug, Deserialize)]
struct ToolRow {
    date: String,
    predicted: String,
}

/// Parses a `date,predicted` CSV.
pub fn load_tool_predictions<R: Read>(source: R, name: impl Into<String>) -> Result<ToolPredictions> {
    let mut reader = csv_reader(source);
    expect_header(&mut reader, &["date", "predicted"])?;
    let mut predictions = Vec::new();
    for (i, row) in reader.deserialize::<ToolRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::MalformedRow {
            line,
            message: e.to_string(),
        })?;
        predictions.push((
            parse_date(&row.date, line)?,
            parse_decimal(&row.predicted, line, "predicted")?,
        ));
    }
    Ok(ToolPredictions {
        name: name.into(),
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolScore {
    pub tool: String,
    pub mape: f64,
    pub rmse: f64,
}

/// Scores each tool's predictions against the actual closes with this crate's
/// own metrics. Every tool must cover exactly the actuals' dates.
pub fn compare_external(actuals: &[(NaiveDate, f64)], tools: &[ToolPredictions]) -> Result<Vec<ToolScore>> {
    if actuals.is_empty() {
        return Err(Error::EmptyRecords);
    }
    tools
        .iter()
        .map(|tool| {
            let by_date: HashMap<NaiveDate, f64> = tool.predictions.iter().copied().collect();
            if by_date.len() != tool.predictions.len() {
                return Err(Error::DateMismatch {
                    source_name: tool.name.clone(),
                    message: "duplicate dates".into(),
                });
            }
            let records = actuals
                .iter()
                .map(|&(date, actual)| {
                    let predicted = by_date.get(&date).copied().ok_or_else(|| Error::DateMismatch {
                        source_name: tool.name.clone(),
                        message: format!("missing prediction for {date}"),
                    })?;
                    Ok(PredictionRecord {
                        date,
                        actual,
                        predicted,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if by_date.len() != actuals.len() {
                let known: std::collections::HashSet<NaiveDate> = actuals.iter().map(|a| a.0).collect();
                let extra = tool
                    .predictions
                    .iter()
                    .find(|p| !known.contains(&p.0))
                    .map(|p| p.0)
                    .expect("more dates than actuals implies an extra one");
                return Err(Error::DateMismatch {
                    source_name: tool.name.clone(),
                    message: format!("prediction for {extra} has no actual"),
                });
            }
            Ok(ToolScore {
                tool: tool.name.clone(),
                mape: eval::mape(&records)?,
                rmse: eval::rmse(&records)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(i: u64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2012, 1, 2).unwrap() + chrono::Days::new(i)
    }

    fn tool(name: &str, actuals: &[(NaiveDate, f64)], offset: f64) -> ToolPredictions {
        ToolPredictions {
            name: name.into(),
            predictions: actuals.iter().map(|&(d, a)| (d, a + offset)).collect(),
        }
    }

    #[test]
    fn identical_tool_scores_zero() {
        let actuals: Vec<_> = (0..5).map(|i| (day(i), 10.0 + i as f64)).collect();
        let s = compare_external(&actuals, &[tool("same", &actuals, 0.0)]).unwrap();
        assert_eq!((s[0].mape, s[0].rmse), (0.0, 0.0));
    }

    #[test]
    fn constant_offsets_give_exact_rmse() {
        let actuals: Vec<_> = (0..7).map(|i| (day(i), 50.0 + 3.0 * i as f64)).collect();
        let tools = [
            tool("a", &actuals, 1.0),
            tool("b", &actuals, -2.0),
            tool("c", &actuals, 3.0),
        ];
        let s = compare_external(&actuals, &tools).unwrap();
        let rmses: Vec<f64> = s.iter().map(|t| t.rmse).collect();
        assert_eq!(rmses, vec![1.0, 2.0, 3.0]);
        assert!(s[0].mape < s[1].mape && s[1].mape < s[2].mape);
    }

    #[test]
    fn date_coverage_is_enforced() {
        let actuals: Vec<_> = (0..4).map(|i| (day(i), 10.0)).collect();
        let mut short = tool("short", &actuals, 0.0);
        short.predictions.pop();
        assert!(matches!(
            compare_external(&actuals, &[short]),
            Err(Error::DateMismatch { .. })
        ));
        let mut long = tool("long", &actuals, 0.0);
        long.predictions.push((day(10), 1.0));
        assert!(compare_external(&actuals, &[long]).is_err());
    }

    #[test]
    fn tool_csv_parses() {
        let t = load_tool_predictions("date,predicted\n2012-01-02,10.5\n".as_bytes(), "enc").unwrap();
        assert_eq!(t.predictions, vec![(day(0), 10.5)]);
        assert!(load_tool_predictions("date,close\n".as_bytes(), "x").is_err());
    }

    #[test]
    fn spec_values_are_checked() {
        let mut spec = SweepSpec {
            base: ExperimentBase::default(),
            variable: SweepVariable::HiddenNeurons,
            values: vec![2.5],
        };
        assert!(spec.validate().is_err());
        spec.values = vec![];
        assert!(spec.validate().is_err());
        spec.variable = SweepVariable::TrainFraction;
        spec.values = vec![1.0];
        assert!(spec.validate().is_err());
        spec.values = vec![0.3];
        assert!(spec.validate().is_ok());
    }
}
