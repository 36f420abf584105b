//! Test-horizon prediction and forecast accuracy metrics.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::{NormalizationParams, PriceSeries};
use crate::error::{Error, Result};
use crate::network::MlpNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub date: NaiveDate,
    pub actual: f64,
    pub predicted: f64,
}

/// How test-horizon inputs are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    /// One step ahead; every input window holds observed closes.
    #[default]
    WalkForward,
    /// Predictions are fed back as inputs after the seed window.
    Recursive,
}

impl std::str::FromStr for PredictionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "walk_forward" => Ok(Self::WalkForward),
            "recursive" => Ok(Self::Recursive),
            other => Err(Error::InvalidConfig(format!(
                "unknown prediction mode {other:?} (expected walk_forward or recursive)"
            ))),
        }
    }
}

impl std::fmt::Display for PredictionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::WalkForward => "walk_forward",
            Self::Recursive => "recursive",
        })
    }
}

fn check_range(series: &PriceSeries, start: usize, horizon: usize, history: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    if start < history {
        return Err(Error::InsufficientHistory { start, window: history });
    }
    if start + horizon > series.len() {
        return Err(Error::HorizonOverrun {
            start,
            horizon,
            len: series.len(),
            max: series.len().saturating_sub(start),
        });
    }
    Ok(())
}

/// One-step-ahead predictions for days `start..start + horizon`, each from the
/// observed closes of the preceding `window` days.
pub fn predict_walk_forward(
    network: &MlpNetwork,
    params: &NormalizationParams,
    series: &PriceSeries,
    start: usize,
    horizon: usize,
) -> Result<Vec<PredictionRecord>> {
    let window = network.topology().input_count();
    check_range(series, start, horizon, window)?;
    let normalized: Vec<f64> = series.closes().map(|c| params.normalize(c)).collect();
    (start..start + horizon)
        .map(|t| {
            let out = network.predict(&normalized[t - window..t])?[0];
            let point = series.points()[t];
            Ok(PredictionRecord {
                date: point.date,
                actual: point.close,
                predicted: params.denormalize(out),
            })
        })
        .collect()
}

/// Multi-step forecast from `seed_window` actual closes, feeding each
/// prediction back as the newest input. Returns prices.
pub fn forecast_recursive(
    network: &MlpNetwork,
    params: &NormalizationParams,
    seed_window: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    let window = network.topology().input_count();
    if seed_window.len() != window {
        return Err(Error::DimensionMismatch {
            what: "recursive seed window",
            expected: window,
            found: seed_window.len(),
        });
    }
    if horizon == 0 {
        return Err(Error::ZeroHorizon);
    }
    let mut inputs: Vec<f64> = seed_window.iter().map(|&c| params.normalize(c)).collect();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = network.predict(&inputs[inputs.len() - window..])?[0];
        inputs.push(next);
        out.push(params.denormalize(next));
    }
    Ok(out)
}

/// Recursive forecast seeded with the `window` closes before `start`, paired
/// with the series' actuals for reporting only.
pub fn predict_recursive(
    network: &MlpNetwork,
    params: &NormalizationParams,
    series: &PriceSeries,
    start: usize,
    horizon: usize,
) -> Result<Vec<PredictionRecord>> {
    let window = network.topology().input_count();
    check_range(series, start, horizon, window)?;
    let seed: Vec<f64> = series.points()[start - window..start].iter().map(|p| p.close).collect();
    let forecast = forecast_recursive(network, params, &seed, horizon)?;
    Ok(series.points()[start..start + horizon]
        .iter()
        .zip(forecast)
        .map(|(p, predicted)| PredictionRecord {
            date: p.date,
            actual: p.close,
            predicted,
        })
        .collect())
}

pub fn predict(
    mode: PredictionMode,
    network: &MlpNetwork,
    params: &NormalizationParams,
    series: &PriceSeries,
    start: usize,
    horizon: usize,
) -> Result<Vec<PredictionRecord>> {
    match mode {
        PredictionMode::WalkForward => predict_walk_forward(network, params, series, start, horizon),
        PredictionMode::Recursive => predict_recursive(network, params, series, start, horizon),
    }
}

/// Naive comparator: tomorrow's close equals today's.
pub fn persistence_baseline(series: &PriceSeries, start: usize, horizon: usize) -> Result<Vec<PredictionRecord>> {
    check_range(series, start, horizon, 1)?;
    let points = series.points();
    Ok((start..start + horizon)
        .map(|t| PredictionRecord {
            date: points[t].date,
            actual: points[t].close,
            predicted: points[t - 1].close,
        })
        .collect())
}

fn check_actuals(records: &[PredictionRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    if let Some(r) = records.iter().find(|r| r.actual.is_nan() || r.actual <= 0.0) {
        return Err(Error::NonPositiveActual {
            date: r.date,
            actual: r.actual,
        });
    }
    Ok(())
}

/// Mean absolute percentage error, in percent.
pub fn mape(records: &[PredictionRecord]) -> Result<f64> {
    check_actuals(records)?;
    let sum: f64 = records.iter().map(|r| (r.actual - r.predicted).abs() / r.actual).sum();
    Ok(100.0 * sum / records.len() as f64)
}

/// Root mean squared error, in price units.
pub fn rmse(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let sum: f64 = records.iter().map(|r| (r.actual - r.predicted).powi(2)).sum();
    Ok((sum / records.len() as f64).sqrt())
}

/// Largest single-day deviation, signed as predicted relative to actual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxVariance {
    pub pct: f64,
    pub date: NaiveDate,
}

/// The signed `(predicted − actual) / actual · 100` of largest magnitude.
/// Ties keep the earliest day.
pub fn max_daily_variance(records: &[PredictionRecord]) -> Result<MaxVariance> {
    check_actuals(records)?;
    let mut best: Option<MaxVariance> = None;
    for r in records {
        let pct = (r.predicted - r.actual) / r.actual * 100.0;
        if best.map_or(true, |b| pct.abs() > b.pct.abs()) {
            best = Some(MaxVariance { pct, date: r.date });
        }
    }
    Ok(best.expect("records are non-empty"))
}

/// Per-day predictions with their summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub records: Vec<PredictionRecord>,
    pub mape: f64,
    pub rmse: f64,
    pub max_variance: MaxVariance,
    pub horizon: usize,
}

impl EvaluationReport {
    pub fn from_records(records: Vec<PredictionRecord>) -> Result<Self> {
        let mape = mape(&records)?;
        let rmse = rmse(&records)?;
        let max_variance = max_daily_variance(&records)?;
        let horizon = records.len();
        Ok(Self {
            records,
            mape,
            rmse,
            max_variance,
            horizon,
        })
    }

    /// JSON summary with the published report keys.
    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            mape_pct: self.mape,
            rmse: self.rmse,
            max_variance_pct: self.max_variance.pct,
            max_variance_date: self.max_variance.date,
            horizon: self.horizon,
            n: self.records.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub mape_pct: f64,
    pub rmse: f64,
    pub max_variance_pct: f64,
    pub max_variance_date: NaiveDate,
    pub horizon: usize,
    pub n: usize,
}
