//! Canonical trace CSV: `record_id,latitude,longitude,satellites,error_margin_m`.
//!
//! Writing always uses dot decimals and comma delimiters. Reading also
//! accepts the comma-decimal locale (`39,953250`) when the file is
//! semicolon-delimited or the field is quoted.

use std::fmt::Write as _;

use super::{GpsFix, Trace};
use crate::error::{Error, Result};
use crate::geodesy::GeoPosition;

pub const TRACE_CSV_HEADER: &str = "record_id,latitude,longitude,satellites,error_margin_m";

const REQUIRED: [&str; 4] = ["record_id", "latitude", "longitude", "satellites"];

struct Columns {
    record_id: usize,
    latitude: usize,
    longitude: usize,
    satellites: usize,
    error_margin: Option<usize>,
}

impl Columns {
    fn locate(headers: &csv::StringRecord) -> Result<Self> {
        let find = |name: &str| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name));
        let missing: Vec<&str> = REQUIRED.iter().copied().filter(|n| find(n).is_none()).collect();
        if !missing.is_empty() {
            return Err(Error::Schema(format!("missing column(s): {}", missing.join(", "))));
        }
        Ok(Columns {
            record_id: find("record_id").unwrap(),
            latitude: find("latitude").unwrap(),
            longitude: find("longitude").unwrap(),
            satellites: find("satellites").unwrap(),
            error_margin: find("error_margin_m"),
        })
    }
}

fn number(raw: &str) -> Option<f64> {
    let normalized = raw.trim().replace(',', ".");
    normalized.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_trace_csv(content: &[u8], reference: GeoPosition) -> Result<Trace> {
    let content = content.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(content);
    let first_line = content.split(|&b| b == b'\n').next().unwrap_or_default();
    let delimiter = if first_line.contains(&b';') { b';' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(content);
    let columns = Columns::locate(reader.headers()?)?;

    let mut fixes = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |what: &str, value: &str| Error::Row {
            line,
            reason: format!("{what} `{value}` is not a valid number"),
        };
        let get = |i: usize| record.get(i).unwrap_or("");

        let record_id = get(columns.record_id)
            .parse::<u32>()
            .map_err(|_| row_err("record_id", get(columns.record_id)))?;
        let lat = number(get(columns.latitude)).ok_or_else(|| row_err("latitude", get(columns.latitude)))?;
        let lon = number(get(columns.longitude)).ok_or_else(|| row_err("longitude", get(columns.longitude)))?;
        let satellites = get(columns.satellites)
            .parse::<u32>()
            .map_err(|_| row_err("satellites", get(columns.satellites)))?;
        let published_error_m = match columns.error_margin.map(get).unwrap_or("") {
            "" => None,
            v => Some(number(v).ok_or_else(|| row_err("error_margin_m", v))?),
        };
        let position = GeoPosition::new(lat, lon).map_err(|e| match e {
            Error::Validation(why) => Error::Validation(format!("line {line}: {why}")),
            other => other,
        })?;

        fixes.push(GpsFix {
            record_id,
            position,
            satellites,
            timestamp: None,
            published_error_m,
        });
    }
    Trace::new(fixes, reference, "")
}

/// Serializes with six-decimal degrees and two-decimal margins.
pub fn write_trace_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(48 * (trace.len() + 1));
    out.push_str(TRACE_CSV_HEADER);
    out.push('\n');
    for fix in trace.fixes() {
        let _ = write!(
            out,
            "{},{:.6},{:.6},{},",
            fix.record_id,
            fix.position.lat(),
            fix.position.lon(),
            fix.satellites
        );
        if let Some(m) = fix.published_error_m {
            let _ = write!(out, "{m:.2}");
        }
        out.push('\n');
    }
    out
}
