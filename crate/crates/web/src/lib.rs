//! Browser bindings for the `geotrack` demo page.
//!
//! Each exported function has a plain Rust twin in [`api`] that returns JSON
//! text, so the logic can be tested without a JavaScript host.

use wasm_bindgen::prelude::*;

pub mod api {
    use geotrack::ingest::{parse_sentence, parse_trace_csv, Sentence};
    use geotrack::{
        bundled, haversine_distance, FilterKind, FilterParams, GeoPosition, ReportBundle, Result,
    };
    use serde_json::{json, Value};

    fn point(p: GeoPosition) -> Value {
        json!([p.lat(), p.lon()])
    }

    /// Runs both filters over a trace CSV and returns positions, error series
    /// and summaries as JSON.
    pub fn run_filters(csv: &str, ref_lat: f64, ref_lon: f64, r: f64, p0: f64) -> Result<String> {
        let reference = GeoPosition::new(ref_lat, ref_lon)?;
        let trace = parse_trace_csv(csv.as_bytes(), reference)?;
        let params: Vec<FilterParams> = [FilterKind::Kalman, FilterKind::Average]
            .into_iter()
            .map(|kind| FilterParams { r, p0, kind })
            .collect();
        let bundle = ReportBundle::build(&trace, &params)?;

        let tracks: Vec<Value> = bundle
            .tracks()
            .iter()
            .map(|t| {
                json!({
                    "kind": t.kind.label(),
                    "positions": t.positions.iter().copied().map(point).collect::<Vec<_>>(),
                    "errors": t.series.values,
                    "summary": t.summary,
                })
            })
            .collect();
        let doc = json!({
            "reference": point(reference),
            "record_ids": trace.fixes().iter().map(|f| f.record_id).collect::<Vec<_>>(),
            "receiver": {
                "positions": trace.positions().into_iter().map(point).collect::<Vec<_>>(),
                "errors": bundle.receiver_series().values,
                "summary": bundle.receiver_summary(),
            },
            "tracks": tracks,
        });
        Ok(doc.to_string())
    }

    pub fn distance_m(a_lat: f64, a_lon: f64, b_lat: f64, b_lon: f64) -> Result<f64> {
        let a = GeoPosition::new(a_lat, a_lon)?;
        let b = GeoPosition::new(b_lat, b_lon)?;
        Ok(haversine_distance(a, b))
    }

    /// Validates one NMEA sentence. Never fails: problems are reported in the
    /// `error` field.
    pub fn check_sentence(line: &str) -> String {
        let doc = match parse_sentence(line.trim()) {
            Ok(Sentence::Gga(g)) => json!({
                "ok": true,
                "kind": "GGA",
                "position": point(g.position),
                "satellites": g.satellites,
                "quality": g.quality,
                "time": g.time.map(|t| t.to_string()),
            }),
            Ok(Sentence::Rmc(r)) => json!({
                "ok": true,
                "kind": "RMC",
                "position": point(r.position),
                "time": r.time.map(|t| t.to_string()),
                "date": r.date.map(|d| d.to_string()),
            }),
            Err(e) => json!({ "ok": false, "error": e.to_string() }),
        };
        doc.to_string()
    }

    pub fn sample_csv() -> &'static str {
        bundled::CLEAR_WEATHER_CSV
    }

    pub fn sample_reference() -> [f64; 2] {
        let r = bundled::clear_weather_meta().reference;
        [r.lat(), r.lon()]
    }
}

fn js_err(e: geotrack::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = runFilters)]
pub fn run_filters(csv: &str, ref_lat: f64, ref_lon: f64, r: f64, p0: f64) -> Result<String, JsError> {
    api::run_filters(csv, ref_lat, ref_lon, r, p0).map_err(js_err)
}

#[wasm_bindgen(js_name = distanceM)]
pub fn distance_m(a_lat: f64, a_lon: f64, b_lat: f64, b_lon: f64) -> Result<f64, JsError> {
    api::distance_m(a_lat, a_lon, b_lat, b_lon).map_err(js_err)
}

#[wasm_bindgen(js_name = checkSentence)]
pub fn check_sentence(line: &str) -> String {
    api::check_sentence(line)
}

#[wasm_bindgen(js_name = sampleCsv)]
pub fn sample_csv() -> String {
    api::sample_csv().to_string()
}

#[wasm_bindgen(js_name = sampleReference)]
pub fn sample_reference() -> Vec<f64> {
    api::sample_reference().to_vec()
}
