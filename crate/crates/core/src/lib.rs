//! Post-processing for noisy GPS traces.
//!
//! Latitude and longitude are filtered independently, either with a scalar
//! Kalman filter (no process noise) or with a cumulative average, and the
//! result is scored by great-circle distance to a surveyed reference point.
//!
//! ```
//! use geotrack::{bundled, ReportBundle, FilterKind, FilterParams};
//!
//! let trace = bundled::clear_weather();
//! let bundle = ReportBundle::build(&trace, &[FilterParams::with_kind(FilterKind::Kalman)]).unwrap();
//! let kalman = bundle.track(FilterKind::Kalman).unwrap();
//! assert!(kalman.summary.final_m < bundle.receiver_summary().final_m);
//! ```

pub mod analysis;
pub mod error;
pub mod filters;
pub mod geodesy;
pub mod ingest;
pub mod report;
#[cfg(feature = "stream")]
pub mod stream;

pub use analysis::{error_series, improvement_rate, summarize, ErrorSeries, ErrorSummary};
pub use error::{Error, Result};
pub use filters::{
    average_step, filter_positions, filter_trace, kalman_init, kalman_step, AverageState, FilterKind,
    FilterParams, KalmanState, PositionFilter,
};
pub use geodesy::{haversine_distance, GeoPosition, EARTH_RADIUS_M};
pub use ingest::{bundled, GpsFix, Trace, TraceMeta};
pub use report::{comparison_table, to_geojson, to_series_csv, ReportBundle};
