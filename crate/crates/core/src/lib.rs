//! Feedforward multilayer-perceptron forecasting of daily closing prices.
//!
//! A series of closes is split chronologically, min-max normalized on the
//! training partition, cut into five-lag sliding windows, and used to train
//! a sigmoid MLP (5:21:21:1 by default) with online backpropagation. The
//! trained network predicts the test horizon one step ahead (or
//! recursively), and predictions are scored with MAPE, RMSE and the largest
//! single-day deviation.
//!
//! ```
//! use mlpcast::{fit, predict_walk_forward, EvaluationReport, ModelSpec, PricePoint, PriceSeries, TrainingConfig};
//!
//! let start = chrono::NaiveDate::from_ymd_opt(2008, 1, 2).unwrap();
//! let points = (0..120)
//!     .map(|i| PricePoint {
//!         date: start + chrono::Days::new(i),
//!         close: 50.0 + 5.0 * (i as f64 / 6.0).sin(),
//!     })
//!     .collect();
//! let series = PriceSeries::new("DEMO", points)?;
//! let spec = ModelSpec {
//!     training: TrainingConfig { epochs: 20, ..TrainingConfig::default() },
//!     ..ModelSpec::default()
//! };
//! let model = fit(&series, &spec)?;
//! let records = predict_walk_forward(&model.network, &model.params, &series, model.split_index, 20)?;
//! let report = EvaluationReport::from_records(records)?;
//! assert!(report.mape.is_finite());
//! # Ok::<(), mlpcast::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod model_file;
pub mod network;
pub mod pipeline;
pub mod reports;
pub mod synthetic;
pub mod train;

pub use data::{
    chronological_split, fit_normalization, load_series, make_windows, NormalizationParams, Pattern, PricePoint,
    PriceSeries, WindowedDataset,
};
pub use error::{Error, Result};
pub use eval::{
    forecast_recursive, mape, max_daily_variance, persistence_baseline, predict_recursive, predict_walk_forward, rmse,
    EvaluationReport, MaxVariance, PredictionMode, PredictionRecord, ReportSummary,
};
pub use experiments::{
    compare_external, sweep_hidden_neurons, sweep_training_volume, trace_training_error, ExperimentBase, SweepResult,
    SweepRow, SweepSpec, SweepVariable, ToolPredictions, ToolScore, TraceExperiment,
};
pub use model_file::{ModelFile, TrainingMetadata};
pub use network::{heuristic_hidden_size, CoefficientSet, Layer, MlpNetwork, NetworkTopology};
pub use pipeline::{fit, FittedModel, ModelSpec};
pub use train::{train, TraceSample, TrainingConfig, TrainingState, TrainingTrace};
