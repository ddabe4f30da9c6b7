//! Receiver records and the formats they arrive in.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::GeoPosition;

pub mod nmea;
mod trace_csv;

pub use nmea::{
    format_gga, nmea_checksum, parse_gga, parse_rmc, parse_sentence, read_nmea, FixAssembler,
    GgaFix, IngestStats, LineOutcome, NmeaLog, RmcFix, Sentence,
};
pub use trace_csv::{parse_trace_csv, write_trace_csv, TRACE_CSV_HEADER};

/// A position solution needs signals from at least this many satellites.
pub const MIN_SATELLITES: u32 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct GpsFix {
    pub record_id: u32,
    pub position: GeoPosition,
    pub satellites: u32,
    /// UTC time of day, when the source carries one.
    pub timestamp: Option<NaiveTime>,
    /// Error margin as published alongside the data. Kept for
    /// cross-checking only; analysis always recomputes distances.
    pub published_error_m: Option<f64>,
}

impl GpsFix {
    pub fn new(record_id: u32, position: GeoPosition, satellites: u32) -> Self {
        GpsFix {
            record_id,
            position,
            satellites,
            timestamp: None,
            published_error_m: None,
        }
    }

    pub fn is_usable(&self) -> bool {
        self.satellites >= MIN_SATELLITES
    }
}

/// An ordered run of fixes and the surveyed location they should agree with.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    fixes: Vec<GpsFix>,
    reference: GeoPosition,
    label: String,
}

impl Trace {
    pub fn new(fixes: Vec<GpsFix>, reference: GeoPosition, label: impl Into<String>) -> Result<Self> {
        if let Some(w) = fixes.windows(2).find(|w| w[1].record_id <= w[0].record_id) {
            return Err(Error::Validation(format!(
                "record ids must be strictly increasing ({} then {})",
                w[0].record_id, w[1].record_id
            )));
        }
        Ok(Trace {
            fixes,
            reference,
            label: label.into(),
        })
    }

    pub fn fixes(&self) -> &[GpsFix] {
        &self.fixes
    }

    pub fn reference(&self) -> GeoPosition {
        self.reference
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.fixes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixes.is_empty()
    }

    pub fn positions(&self) -> Vec<GeoPosition> {
        self.fixes.iter().map(|f| f.position).collect()
    }

    /// Copy of the trace without fixes below [`MIN_SATELLITES`].
    pub fn usable_only(&self) -> Trace {
        Trace {
            fixes: self.fixes.iter().filter(|f| f.is_usable()).cloned().collect(),
            reference: self.reference,
            label: self.label.clone(),
        }
    }
}

/// Sidecar metadata stored next to a trace CSV as `<stem>.meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    #[serde(default)]
    pub label: String,
    pub reference: GeoPosition,
}

impl TraceMeta {
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("meta.json")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain struct serializes");
        s.push('\n');
        s
    }
}

/// The clear-weather experiment: 30 receiver records and the surveyed
/// reference point.
pub mod bundled {
    use super::*;

    pub const CLEAR_WEATHER_CSV: &str = include_str!("../../data/clear_weather.csv");
    pub const CLEAR_WEATHER_META: &str = include_str!("../../data/clear_weather.meta.json");

    pub fn clear_weather_meta() -> TraceMeta {
        serde_json::from_str(CLEAR_WEATHER_META).expect("bundled metadata is valid")
    }

    pub fn clear_weather() -> Trace {
        let meta = clear_weather_meta();
        parse_trace_csv(CLEAR_WEATHER_CSV.as_bytes(), meta.reference)
            .expect("bundled trace is valid")
            .with_label(meta.label)
    }
}
