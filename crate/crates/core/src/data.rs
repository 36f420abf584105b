//! Daily closing-price series: CSV ingestion, chronological splitting,
//! min-max normalization and sliding-window pattern generation.

use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_TARGET_RANGE: (f64, f64) = (0.1, 0.9);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
}

/// Date-ordered closing prices for one instrument.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceSeries {
    instrument: String,
    points: Vec<PricePoint>,
}

impl PriceSeries {
    /// Builds a series, checking strictly increasing dates and positive closes.
    pub fn new(instrument: impl Into<String>, points: Vec<PricePoint>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            // rows are 1-based after the header line
            let line = i as u64 + 2;
            if !(p.close.is_finite() && p.close > 0.0) {
                return Err(Error::NonPositiveClose { line, close: p.close });
            }
            if i > 0 && p.date <= points[i - 1].date {
                return Err(Error::DateOrder {
                    line,
                    date: p.date,
                    previous: points[i - 1].date,
                });
            }
        }
        Ok(Self {
            instrument: instrument.into(),
            points,
        })
    }

    pub fn instrument(&self) -> &str {
        &self.instrument
    }

    pub fn points(&self) -> &[PricePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn closes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.close)
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.points.first().map(|p| p.date)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.points.last().map(|p| p.date)
    }

    /// Index of the first point dated strictly after `date`.
    pub fn index_after(&self, date: NaiveDate) -> usize {
        self.points.partition_point(|p| p.date <= date)
    }

    fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            instrument: self.instrument.clone(),
            points: self.points[range].to_vec(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct CloseRow {
    date: String,
    close: String,
}

pub(crate) fn parse_date(raw: &str, line: u64) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(raw.trim(), "%Y-%m-%d").map_err(|e| Error::MalformedRow {
        line,
        message: format!("bad date {raw:?}: {e}"),
    })
}

pub(crate) fn parse_decimal(raw: &str, line: u64, column: &str) -> Result<f64> {
    let value: f64 = raw.trim().parse().map_err(|e| Error::MalformedRow {
        line,
        message: format!("bad {column} {raw:?}: {e}"),
    })?;
    if !value.is_finite() {
        return Err(Error::MalformedRow {
            line,
            message: format!("{column} {raw:?} is not finite"),
        });
    }
    Ok(value)
}

/// Checks that a CSV reader's header row is exactly `expected`.
pub(crate) fn expect_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let headers = reader.headers()?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("expected header {:?}, found {:?}", expected.join(","), found.join(",")),
        });
    }
    Ok(())
}

pub(crate) fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn record_line(pos: Option<&csv::Position>, fallback: u64) -> u64 {
    pos.map(|p| p.line()).unwrap_or(fallback)
}

/// Parses a `date,close` CSV into a series.
pub fn load_series<R: Read>(source: R, instrument: impl Into<String>) -> Result<PriceSeries> {
    let mut reader = csv_reader(source);
    expect_header(&mut reader, &["date", "close"])?;
    let mut points: Vec<PricePoint> = Vec::new();
    for (i, row) in reader.deserialize::<CloseRow>().enumerate() {
        let row = row.map_err(|e| Error::MalformedRow {
            line: record_line(e.position(), i as u64 + 2),
            message: e.to_string(),
        })?;
        let line = i as u64 + 2;
        let date = parse_date(&row.date, line)?;
        let close = parse_decimal(&row.close, line, "close")?;
        if close <= 0.0 {
            return Err(Error::NonPositiveClose { line, close });
        }
        if let Some(prev) = points.last() {
            if date <= prev.date {
                return Err(Error::DateOrder {
                    line,
                    date,
                    previous: prev.date,
                });
            }
        }
        points.push(PricePoint { date, close });
    }
    Ok(PriceSeries {
        instrument: instrument.into(),
        points,
    })
}

/// Index at which a chronological split puts the first test point.
pub fn split_index(len: usize, train_fraction: f64) -> Result<usize> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train fraction {train_fraction} must lie in (0, 1)"
        )));
    }
    let cut = (train_fraction * len as f64).floor() as usize;
    if cut == 0 {
        return Err(Error::DegenerateSplit {
            len,
            fraction: train_fraction,
            side: "training",
        });
    }
    if cut >= len {
        return Err(Error::DegenerateSplit {
            len,
            fraction: train_fraction,
            side: "test",
        });
    }
    Ok(cut)
}

/// First `floor(fraction · n)` points train, the remainder test. Never shuffles.
pub fn chronological_split(series: &PriceSeries, train_fraction: f64) -> Result<(PriceSeries, PriceSeries)> {
    let cut = split_index(series.len(), train_fraction)?;
    Ok((series.slice(0..cut), series.slice(cut..series.len())))
}

/// Affine map from a price range onto a target interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub source_min: f64,
    pub source_max: f64,
    pub target_lo: f64,
    pub target_hi: f64,
}

impl NormalizationParams {
    pub fn new(source_min: f64, source_max: f64, target_lo: f64, target_hi: f64) -> Result<Self> {
        if ![source_min, source_max, target_lo, target_hi]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::NonFinite("normalization parameters".into()));
        }
        if source_max <= source_min {
            return Err(Error::ZeroRange(source_min));
        }
        if target_hi <= target_lo {
            return Err(Error::InvalidConfig(format!(
                "normalization target range [{target_lo}, {target_hi}] is empty"
            )));
        }
        Ok(Self {
            source_min,
            source_max,
            target_lo,
            target_hi,
        })
    }

    fn slope(&self) -> f64 {
        (self.target_hi - self.target_lo) / (self.source_max - self.source_min)
    }

    pub fn normalize(&self, value: f64) -> f64 {
        self.target_lo + (value - self.source_min) * self.slope()
    }

    pub fn denormalize(&self, value: f64) -> f64 {
        self.source_min + (value - self.target_lo) / self.slope()
    }
}

/// Fits min-max parameters on the training partition only. Test prices may
/// later map outside `[target_lo, target_hi]`; they are not clamped.
pub fn fit_normalization(train: &PriceSeries, target_lo: f64, target_hi: f64) -> Result<NormalizationParams> {
    if train.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "normalization needs at least 2 training points, got {}",
            train.len()
        )));
    }
    let (min, max) = train
        .closes()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c), hi.max(c)));
    if max <= min {
        return Err(Error::ZeroRange(min));
    }
    NormalizationParams::new(min, max, target_lo, target_hi)
}

/// One supervised pattern: `window` normalized lags and the next normalized close.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub inputs: Vec<f64>,
    pub target: f64,
    pub target_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    window: usize,
    patterns: Vec<Pattern>,
}

impl WindowedDataset {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Replaces every target; used to build fixed-point datasets in tests.
    pub fn with_targets(mut self, targets: impl IntoIterator<Item = f64>) -> Self {
        for (p, t) in self.patterns.iter_mut().zip(targets) {
            p.target = t;
        }
        self
    }
}

/// Slides a `window`-wide frame over the series: `max(0, n − window)` patterns.
pub fn make_windows(series: &PriceSeries, params: &NormalizationParams, window: usize) -> Result<WindowedDataset> {
    if window == 0 {
        return Err(Error::InvalidConfig("window must be at least 1".into()));
    }
    let normalized: Vec<f64> = series.closes().map(|c| params.normalize(c)).collect();
    let patterns = (window..series.len())
        .map(|t| Pattern {
            inputs: normalized[t - window..t].to_vec(),
            target: normalized[t],
            target_date: series.points[t].date,
        })
        .collect();
    Ok(WindowedDataset { window, patterns })
}
