//! Serializable artifacts for a filtered trace: a GeoJSON overlay of the
//! fixes and estimates, per-record error curves as CSV, and a comparison
//! table of minimum/final errors.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crate::analysis::{error_series, improvement_rate, summarize, ErrorSeries, ErrorSummary};
use crate::error::{Error, Result};
use crate::filters::{filter_trace, FilterKind, FilterParams};
use crate::geodesy::GeoPosition;
use crate::ingest::Trace;

pub const RECEIVER_LABEL: &str = "receiver";
pub const REFERENCE_ROLE: &str = "reference";

#[derive(Clone, Debug, PartialEq)]
pub struct FilteredTrack {
    pub kind: FilterKind,
    pub positions: Vec<GeoPosition>,
    pub series: ErrorSeries,
    pub summary: ErrorSummary,
}

/// Raw trace plus every filtered variant, with error series and summaries.
/// All position lists and series have the trace's length.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportBundle {
    raw: Trace,
    receiver: ErrorSeries,
    receiver_summary: ErrorSummary,
    filtered: Vec<FilteredTrack>,
}

impl ReportBundle {
    /// Runs each filter configuration over `trace`.
    pub fn build(trace: &Trace, params: &[FilterParams]) -> Result<Self> {
        let tracks = params
            .iter()
            .map(|p| Ok((p.kind, filter_trace(trace, p)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_filtered(trace.clone(), tracks)
    }

    /// Assembles a bundle from positions that were already filtered.
    pub fn from_filtered(raw: Trace, tracks: Vec<(FilterKind, Vec<GeoPosition>)>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyInput("trace has no fixes"));
        }
        let reference = raw.reference();
        let receiver = error_series(&raw.positions(), reference, RECEIVER_LABEL)?;
        let receiver_summary = summarize(&receiver, None)?;

        let mut filtered = Vec::with_capacity(tracks.len());
        for (kind, positions) in tracks {
            if positions.len() != raw.len() {
                return Err(Error::Shape {
                    expected: raw.len(),
                    found: positions.len(),
                });
            }
            if filtered.iter().any(|t: &FilteredTrack| t.kind == kind) {
                return Err(Error::InvalidArgument(format!("filter `{kind}` given twice")));
            }
            let series = error_series(&positions, reference, kind.label())?;
            let summary = summarize(&series, Some(&receiver))?;
            filtered.push(FilteredTrack {
                kind,
                positions,
                series,
                summary,
            });
        }
        filtered.sort_by_key(|t| t.kind);

        Ok(ReportBundle {
            raw,
            receiver,
            receiver_summary,
            filtered,
        })
    }

    pub fn raw(&self) -> &Trace {
        &self.raw
    }

    pub fn receiver_series(&self) -> &ErrorSeries {
        &self.receiver
    }

    pub fn receiver_summary(&self) -> &ErrorSummary {
        &self.receiver_summary
    }

    pub fn tracks(&self) -> &[FilteredTrack] {
        &self.filtered
    }

    pub fn track(&self, kind: FilterKind) -> Option<&FilteredTrack> {
        self.filtered.iter().find(|t| t.kind == kind)
    }

    pub fn kinds(&self) -> Vec<FilterKind> {
        self.filtered.iter().map(|t| t.kind).collect()
    }
}

fn point(p: GeoPosition) -> Value {
    json!({ "type": "Point", "coordinates": [p.lon(), p.lat()] })
}

/// RFC 7946 FeatureCollection, coordinates in `[lon, lat]` order at full
/// precision. Marker colors follow the simplestyle convention.
pub fn to_geojson(bundle: &ReportBundle) -> String {
    let trace = bundle.raw();
    let mut features = Vec::with_capacity(1 + trace.len() * (1 + bundle.tracks().len()));

    features.push(json!({
        "type": "Feature",
        "geometry": point(trace.reference()),
        "properties": { "role": REFERENCE_ROLE, "label": trace.label(), "marker-color": "#2ca02c" },
    }));
    for (fix, err) in trace.fixes().iter().zip(&bundle.receiver_series().values) {
        features.push(json!({
            "type": "Feature",
            "geometry": point(fix.position),
            "properties": {
                "role": RECEIVER_LABEL,
                "record_id": fix.record_id,
                "satellites": fix.satellites,
                "error_m": err,
                "marker-color": "#d62728",
            },
        }));
    }
    for track in bundle.tracks() {
        let color = match track.kind {
            FilterKind::Kalman => "#1f77b4",
            FilterKind::Average => "#ff7f0e",
        };
        let line: Vec<Value> = track.positions.iter().map(|p| json!([p.lon(), p.lat()])).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": line },
            "properties": { "role": track.kind.label(), "stroke": color },
        }));
        for ((fix, p), err) in trace.fixes().iter().zip(&track.positions).zip(&track.series.values) {
            features.push(json!({
                "type": "Feature",
                "geometry": point(*p),
                "properties": {
                    "role": track.kind.label(),
                    "record_id": fix.record_id,
                    "error_m": err,
                    "marker-color": color,
                },
            }));
        }
    }

    let doc = json!({ "type": "FeatureCollection", "features": features });
    let mut out = serde_json::to_string_pretty(&doc).expect("json values serialize");
    out.push('\n');
    out
}

/// Header of the error-series CSV for the given filters. Kalman precedes
/// Average regardless of argument order.
pub fn series_csv_header(kinds: &[FilterKind]) -> String {
    let mut kinds = kinds.to_vec();
    kinds.sort();
    let mut header = String::from("record_id,receiver_m");
    for k in kinds {
        let _ = write!(header, ",{}_m", k.label());
    }
    header
}

/// One CSV row; `filtered_m` must follow the header's column order.
pub fn series_csv_row(record_id: u32, receiver_m: f64, filtered_m: &[f64]) -> String {
    let mut row = format!("{record_id},{receiver_m:.2}");
    for v in filtered_m {
        let _ = write!(row, ",{v:.2}");
    }
    row
}

pub fn to_series_csv(bundle: &ReportBundle) -> String {
    let mut out = series_csv_header(&bundle.kinds());
    out.push('\n');
    for (i, fix) in bundle.raw().fixes().iter().enumerate() {
        let filtered: Vec<f64> = bundle.tracks().iter().map(|t| t.series.values[i]).collect();
        out.push_str(&series_csv_row(fix.record_id, bundle.receiver_series().values[i], &filtered));
        out.push('\n');
    }
    out
}

/// Minimum and final error per source with improvement over the receiver.
pub fn comparison_table(bundle: &ReportBundle) -> String {
    let recv = bundle.receiver_summary();
    let mut header = vec![format!("{RECEIVER_LABEL}_m")];
    let mut min_row = vec![format!("{:.2}", recv.min_m)];
    let mut idx_row = vec![recv.min_index.to_string()];
    let mut final_row = vec![format!("{:.2}", recv.final_m)];

    for t in bundle.tracks() {
        let label = t.kind.label();
        header.push(format!("{label}_m"));
        header.push(format!("{label}_improvement_pct"));
        min_row.push(format!("{:.2}", t.summary.min_m));
        min_row.push(format!("{:.2}", t.summary.improvement_pct.unwrap_or(0.0)));
        idx_row.push(t.summary.min_index.to_string());
        idx_row.push("-".into());
        final_row.push(format!("{:.2}", t.summary.final_m));
        let final_pct = improvement_rate(recv.final_m, t.summary.final_m)
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|_| "-".into());
        final_row.push(final_pct);
    }

    let widths: Vec<usize> = header.iter().map(|h| h.len().max(8)).collect();
    let mut out = String::new();
    let trace = bundle.raw();
    let _ = writeln!(
        out,
        "# {} ({} fixes, reference {})",
        if trace.label().is_empty() { "trace" } else { trace.label() },
        trace.len(),
        trace.reference()
    );
    let mut line = |name: &str, cells: &[String]| {
        let _ = write!(out, "{name:<14}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {c:>w$}");
        }
        out.push('\n');
    };
    line("metric", &header);
    line("min_error", &min_row);
    line("min_index", &idx_row);
    line("final_error", &final_row);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{bundled, GpsFix};

    fn both() -> Vec<FilterParams> {
        vec![
            FilterParams::with_kind(FilterKind::Average),
            FilterParams::with_kind(FilterKind::Kalman),
        ]
    }

    fn features(doc: &str) -> Vec<Value> {
        let v: Value = serde_json::from_str(doc).unwrap();
        assert_eq!(v["type"], "FeatureCollection");
        v["features"].as_array().unwrap().clone()
    }

    #[test]
    fn geojson_receiver_only() {
        let bundle = ReportBundle::build(&bundled::clear_weather(), &[]).unwrap();
        let f = features(&to_geojson(&bundle));
        assert_eq!(f.len(), 31);
        assert_eq!(f.iter().filter(|x| x["properties"]["role"] == "receiver").count(), 30);
        let reference = &f[0];
        assert_eq!(reference["properties"]["role"], "reference");
        assert_eq!(reference["geometry"]["coordinates"][0], 32.7966589);
        assert_eq!(reference["geometry"]["coordinates"][1], 39.9525646);
    }

    #[test]
    fn geojson_with_both_filters() {
        let trace = bundled::clear_weather();
        let bundle = ReportBundle::build(&trace, &both()).unwrap();
        let f = features(&to_geojson(&bundle));
        assert_eq!(f.len(), 93);
        let lines: Vec<_> = f.iter().filter(|x| x["geometry"]["type"] == "LineString").collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0]["geometry"]["coordinates"].as_array().unwrap().len(), 30);

        // Every pair re-ingests as (lon, lat) to the original position.
        let kalman = &bundle.track(FilterKind::Kalman).unwrap().positions;
        let pts: Vec<_> = f
            .iter()
            .filter(|x| x["properties"]["role"] == "kalman" && x["geometry"]["type"] == "Point")
            .collect();
        for (feat, expected) in pts.iter().zip(kalman) {
            let c = &feat["geometry"]["coordinates"];
            let (lon, lat) = (c[0].as_f64().unwrap(), c[1].as_f64().unwrap());
            assert!(lon.abs() <= 180.0);
            let back = GeoPosition::new(lat, lon).unwrap();
            assert!((back.lat() - expected.lat()).abs() <= 1e-7);
            assert!((back.lon() - expected.lon()).abs() <= 1e-7);
        }
    }

    #[test]
    fn empty_trace_cannot_form_bundle() {
        let t = Trace::new(vec![], GeoPosition::new(0.0, 0.0).unwrap(), "").unwrap();
        assert!(matches!(ReportBundle::build(&t, &[]), Err(Error::EmptyInput(_))));
        assert!(matches!(ReportBundle::build(&t, &both()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn mismatched_or_duplicate_tracks_are_rejected() {
        let trace = bundled::clear_weather();
        let short = trace.positions()[..5].to_vec();
        assert!(matches!(
            ReportBundle::from_filtered(trace.clone(), vec![(FilterKind::Kalman, short)]),
            Err(Error::Shape { .. })
        ));
        let p = FilterParams::default();
        assert!(ReportBundle::build(&trace, &[p, p]).is_err());
    }

    #[test]
    fn series_csv_receiver_only() {
        let bundle = ReportBundle::build(&bundled::clear_weather(), &[]).unwrap();
        let csv = to_series_csv(&bundle);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "record_id,receiver_m");
        assert_eq!(lines.len(), 31);
        assert_eq!(lines[1], "0,80.22");
    }

    #[test]
    fn series_csv_with_filters() {
        let bundle = ReportBundle::build(&bundled::clear_weather(), &both()).unwrap();
        let csv = to_series_csv(&bundle);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "record_id,receiver_m,kalman_m,average_m");
        let last: Vec<&str> = lines[30].split(',').collect();
        assert_eq!(last[0], "29");
        let kalman: f64 = last[2].parse().unwrap();
        assert!((kalman - 3.64).abs() <= 0.1, "{kalman}");
    }

    #[test]
    fn single_fix_series_has_one_row() {
        let r = GeoPosition::new(1.0, 1.0).unwrap();
        let t = Trace::new(vec![GpsFix::new(4, r, 5)], r, "").unwrap();
        let bundle = ReportBundle::build(&t, &both()).unwrap();
        let csv = to_series_csv(&bundle);
        assert_eq!(csv, "record_id,receiver_m,kalman_m,average_m\n4,0.00,0.00,0.00\n");
    }

    #[test]
    fn comparison_table_layout() {
        let bundle = ReportBundle::build(&bundled::clear_weather(), &both()).unwrap();
        let table = comparison_table(&bundle);
        let rows: Vec<Vec<&str>> = table.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
        assert_eq!(
            rows[0],
            ["metric", "receiver_m", "kalman_m", "kalman_improvement_pct", "average_m", "average_improvement_pct"]
        );
        assert_eq!(rows[1][0], "min_error");
        assert_eq!(rows[2][..3], ["min_index", "29", "21"]);
        assert!(table.starts_with("# clear weather (30 fixes, reference 39.9525646,32.7966589)"));
    }
}
