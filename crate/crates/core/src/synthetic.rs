//! Deterministic synthetic price series for smoke tests and benchmarks.

use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::data::{PricePoint, PriceSeries};

/// `n` consecutive weekdays starting at `start` (or the next weekday after it).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

/// Noiseless sinusoid `level + amplitude·sin(2π·t/period)` on business days.
pub fn sine_series(start: NaiveDate, n: usize, level: f64, amplitude: f64, period: f64) -> PriceSeries {
    assert!(level > amplitude.abs(), "closes must stay positive");
    let points = business_days(start, n)
        .into_iter()
        .enumerate()
        .map(|(t, date)| PricePoint {
            date,
            close: level + amplitude * (std::f64::consts::TAU * t as f64 / period).sin(),
        })
        .collect();
    PriceSeries::new("SINE", points).expect("generated series is valid")
}

/// The bundled corpus: 1,000 business days from 2008-01-02, level 100,
/// amplitude 20, period 40 days.
pub fn sine_corpus() -> PriceSeries {
    let start = NaiveDate::from_ymd_opt(2008, 1, 2).expect("valid date");
    sine_series(start, 1000, 100.0, 20.0, 40.0)
}

/// Renders a series as `date,close` CSV with shortest round-trip decimals.
pub fn to_csv(series: &PriceSeries) -> String {
    let mut out = String::from("date,close\n");
    for p in series.points() {
        out.push_str(&format!("{},{}\n", p.date, p.close));
    }
    out
}
