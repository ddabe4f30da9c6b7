//! Error margins against the reference point and filter-vs-receiver
//! comparisons.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::{haversine_distance, GeoPosition};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub label: String,
    pub values: Vec<f64>,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub final_m: f64,
    pub min_m: f64,
    /// Position of the minimum in the series; lowest index on ties.
    pub min_index: usize,
    /// Reduction of the minimum error relative to a baseline, in percent.
    pub improvement_pct: Option<f64>,
}

/// Distance in meters from each position to `reference`.
pub fn error_series(
    positions: &[GeoPosition],
    reference: GeoPosition,
    label: impl Into<String>,
) -> Result<ErrorSeries> {
    if positions.is_empty() {
        return Err(Error::EmptyInput("no positions to measure"));
    }
    Ok(ErrorSeries {
        label: label.into(),
        values: positions.iter().map(|&p| haversine_distance(p, reference)).collect(),
    })
}

fn minimum(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}

pub fn summarize(series: &ErrorSeries, baseline: Option<&ErrorSeries>) -> Result<ErrorSummary> {
    let final_m = *series
        .values
        .last()
        .ok_or(Error::EmptyInput("error series is empty"))?;
    let (min_index, min_m) = minimum(&series.values);

    let improvement_pct = match baseline {
        None => None,
        Some(base) if base.len() != series.len() => {
            return Err(Error::Shape {
                expected: series.len(),
                found: base.len(),
            })
        }
        // Undefined against a perfect baseline.
        Some(base) => match minimum(&base.values).1 {
            b if b > 0.0 => Some(improvement_rate(b, min_m)?),
            _ => None,
        },
    };

    Ok(ErrorSummary {
        final_m,
        min_m,
        min_index,
        improvement_pct,
    })
}

/// `100 * (baseline - filtered) / baseline`, evaluated as
/// `100 * (1 - filtered / baseline)` so that 0 and `baseline` map to exactly
/// 100 and 0.
pub fn improvement_rate(baseline_m: f64, filtered_m: f64) -> Result<f64> {
    if !(baseline_m.is_finite() && baseline_m > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "baseline error must be positive, got {baseline_m}"
        )));
    }
    if !(filtered_m.is_finite() && filtered_m >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "filtered error must be non-negative, got {filtered_m}"
        )));
    }
    Ok(100.0 * (1.0 - filtered_m / baseline_m))
}
