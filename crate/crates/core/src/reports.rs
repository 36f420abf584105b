//! CSV and JSON renderings of predictions, traces, sweeps and comparisons,
//! plus the loaders that read them back.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::data::{csv_reader, parse_date, parse_decimal};
use crate::error::{Error, Result};
use crate::eval::{PredictionRecord, ReportSummary};
use crate::experiments::{SweepResult, SweepVariable, ToolScore};
use crate::train::TrainingTrace;

pub const PREDICTION_HEADER: [&str; 3] = ["date", "actual", "predicted"];
pub const TRACE_HEADER: [&str; 2] = ["epoch", "mse"];
pub const COMPARE_HEADER: [&str; 3] = ["tool", "mape_pct", "rmse"];

fn header_line(columns: &[&str]) -> String {
    columns.join(",") + "\n"
}

pub fn write_predictions<W: Write>(mut out: W, records: &[PredictionRecord]) -> std::io::Result<()> {
    out.write_all(header_line(&PREDICTION_HEADER).as_bytes())?;
    for r in records {
        writeln!(out, "{},{},{}", r.date, r.actual, r.predicted)?;
    }
    Ok(())
}

/// Actual closes, with the predicted column when the file has one.
#[derive(Debug, Clone, PartialEq)]
pub struct ActualsFile {
    pub actuals: Vec<(NaiveDate, f64)>,
    pub predicted: Option<Vec<f64>>,
}

impl ActualsFile {
    pub fn records(&self) -> Option<Vec<PredictionRecord>> {
        self.predicted.as_ref().map(|p| {
            self.actuals
                .iter()
                .zip(p)
                .map(|(&(date, actual), &predicted)| PredictionRecord {
                    date,
                    actual,
                    predicted,
                })
                .collect()
        })
    }
}

/// Reads `date,actual,predicted` (or `date,actual`) CSV.
pub fn read_actuals<R: Read>(source: R) -> Result<ActualsFile> {
    let mut reader = csv_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let with_predicted = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["date", "actual", "predicted"] => true,
        ["date", "actual"] => false,
        other => {
            return Err(Error::MalformedRow {
                line: 1,
                message: format!("expected header \"date,actual,predicted\", found {:?}", other.join(",")),
            })
        }
    };
    let mut actuals = Vec::new();
    let mut predicted = Vec::new();
    let mut previous: Option<NaiveDate> = None;
    for (i, row) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::MalformedRow {
            line,
            message: e.to_string(),
        })?;
        let date = parse_date(&row[0], line)?;
        if let Some(prev) = previous {
            if date <= prev {
                return Err(Error::DateOrder {
                    line,
                    date,
                    previous: prev,
                });
            }
        }
        previous = Some(date);
        actuals.push((date, parse_decimal(&row[1], line, "actual")?));
        if with_predicted {
            predicted.push(parse_decimal(&row[2], line, "predicted")?);
        }
    }
    Ok(ActualsFile {
        actuals,
        predicted: with_predicted.then_some(predicted),
    })
}

/// Reads a full `date,actual,predicted` file.
pub fn read_predictions<R: Read>(source: R) -> Result<Vec<PredictionRecord>> {
    read_actuals(source)?.records().ok_or_else(|| Error::MalformedRow {
        line: 1,
        message: "prediction file has no predicted column".into(),
    })
}

pub fn write_trace<W: Write>(mut out: W, trace: &TrainingTrace) -> std::io::Result<()> {
    out.write_all(header_line(&TRACE_HEADER).as_bytes())?;
    for s in trace.samples() {
        writeln!(out, "{},{}", s.epoch, s.mse)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    epoch: u64,
    mse: f64,
}

/// Reads an `epoch,mse` CSV back as `(epoch, mse)` pairs.
pub fn read_trace<R: Read>(source: R) -> Result<Vec<(u64, f64)>> {
    let mut reader = csv_reader(source);
    crate::data::expect_header(&mut reader, &TRACE_HEADER)?;
    reader
        .deserialize::<TraceRow>()
        .enumerate()
        .map(|(i, row)| {
            row.map(|r| (r.epoch, r.mse)).map_err(|e| Error::MalformedRow {
                line: i as u64 + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Name of a sweep CSV's first column.
pub fn sweep_value_column(variable: SweepVariable) -> &'static str {
    match variable {
        SweepVariable::HiddenNeurons => "hidden_neurons",
        SweepVariable::TrainFraction => "train_fraction",
        SweepVariable::Epochs => "epochs",
    }
}

pub fn write_sweep<W: Write>(mut out: W, result: &SweepResult) -> std::io::Result<()> {
    writeln!(
        out,
        "{},mape_pct,rmse,train_mse_final,seed",
        sweep_value_column(result.spec.variable)
    )?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.value, r.mape, r.rmse, r.train_mse_final, r.seed
        )?;
    }
    Ok(())
}

/// One row of a sweep CSV as read back from disk.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct SweepCsvRow {
    pub value: f64,
    pub mape_pct: f64,
    pub rmse: f64,
    pub train_mse_final: f64,
    pub seed: u64,
}

/// Reads a sweep CSV, returning the value column's name and the rows.
pub fn read_sweep<R: Read>(source: R) -> Result<(String, Vec<SweepCsvRow>)> {
    let mut reader = csv_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.len() != 5 || headers[1..] != ["mape_pct", "rmse", "train_mse_final", "seed"] {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("unexpected sweep header {:?}", headers.join(",")),
        });
    }
    let rows = reader
        .records()
        .enumerate()
        .map(|(i, row)| {
            let line = i as u64 + 2;
            let row = row.map_err(|e| Error::MalformedRow {
                line,
                message: e.to_string(),
            })?;
            let num = |k: usize, name: &str| -> Result<f64> {
                row[k].trim().parse::<f64>().map_err(|e| Error::MalformedRow {
                    line,
                    message: format!("bad {name} {:?}: {e}", &row[k]),
                })
            };
            Ok(SweepCsvRow {
                value: num(0, "value")?,
                mape_pct: num(1, "mape_pct")?,
                rmse: num(2, "rmse")?,
                train_mse_final: num(3, "train_mse_final")?,
                seed: row[4].trim().parse().map_err(|e| Error::MalformedRow {
                    line,
                    message: format!("bad seed {:?}: {e}", &row[4]),
                })?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((headers[0].clone(), rows))
}

pub fn write_comparison<W: Write>(mut out: W, scores: &[ToolScore]) -> std::io::Result<()> {
    out.write_all(header_line(&COMPARE_HEADER).as_bytes())?;
    for s in scores {
        writeln!(out, "{},{},{}", s.tool, s.mape, s.rmse)?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CompareRow {
    tool: String,
    mape_pct: f64,
    rmse: f64,
}

pub fn read_comparison<R: Read>(source: R) -> Result<Vec<ToolScore>> {
    let mut reader = csv_reader(source);
    crate::data::expect_header(&mut reader, &COMPARE_HEADER)?;
    reader
        .deserialize::<CompareRow>()
        .enumerate()
        .map(|(i, row)| {
            row.map(|r| ToolScore {
                tool: r.tool,
                mape: r.mape_pct,
                rmse: r.rmse,
            })
            .map_err(|e| Error::MalformedRow {
                line: i as u64 + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn summary_to_json(summary: &ReportSummary) -> Result<String> {
    Ok(serde_json::to_string_pretty(summary)? + "\n")
}

pub fn summary_from_json(text: &str) -> Result<ReportSummary> {
    Ok(serde_json::from_str(text)?)
}
