//! Scalar Kalman and cumulative-average filters, run independently on
//! latitude and longitude.
//!
//! Both filters operate directly on decimal degrees. The Kalman variant has
//! no process noise, so its covariance shrinks monotonically and the gain
//! sequence is fully determined by `p0` and `r`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesy::GeoPosition;
use crate::ingest::Trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Kalman,
    Average,
}

impl FilterKind {
    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Kalman => "kalman",
            FilterKind::Average => "average",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kalman" => Ok(FilterKind::Kalman),
            "average" | "avg" => Ok(FilterKind::Average),
            other => Err(Error::InvalidArgument(format!("unknown filter kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// Measurement noise.
    pub r: f64,
    /// Initial error covariance.
    pub p0: f64,
    pub kind: FilterKind,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            r: 1.0,
            p0: 4.0,
            kind: FilterKind::Kalman,
        }
    }
}

impl FilterParams {
    pub fn with_kind(kind: FilterKind) -> Self {
        FilterParams {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidParameter(format!("r must be > 0, got {}", self.r)));
        }
        // p0 == 0 would claim a noise-free start and freeze the filter.
        if !(self.p0.is_finite() && self.p0 > 0.0) {
            return Err(Error::InvalidParameter(format!("p0 must be > 0, got {}", self.p0)));
        }
        Ok(())
    }
}

fn finite(z: f64) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::InvalidArgument(format!("non-finite observation {z}")))
    }
}

/// One-dimensional Kalman filter state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KalmanState {
    estimate: f64,
    covariance: f64,
    noise: f64,
    gain: Option<f64>,
}

impl KalmanState {
    pub fn new(x0: f64, params: &FilterParams) -> Result<Self> {
        params.validate()?;
        Ok(KalmanState {
            estimate: finite(x0)?,
            covariance: params.p0,
            noise: params.r,
            gain: None,
        })
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    pub fn covariance(&self) -> f64 {
        self.covariance
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Gain used by the most recent update, `None` before the first one.
    pub fn gain(&self) -> Option<f64> {
        self.gain
    }

    /// Consumes one observation and returns the new estimate.
    pub fn update(&mut self, z: f64) -> Result<f64> {
        let z = finite(z)?;
        let prior_x = self.estimate;
        let prior_p = self.covariance;

        let gain = prior_p / (prior_p + self.noise);
        // 1 - gain, without the cancellation of subtracting from one.
        let complement = self.noise / (prior_p + self.noise);
        // Same value as gain*z + (1-gain)*prior_x, but exact when z == prior_x.
        self.estimate = prior_x + gain * (z - prior_x);
        self.covariance = complement * prior_p;
        self.gain = Some(gain);
        Ok(self.estimate)
    }
}

/// Running arithmetic mean of every observation seen so far.
///
/// The mean is updated incrementally, `m += (z - m) / n`, which equals
/// `total / n` algebraically and keeps a constant input an exact fixed point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AverageState {
    mean: f64,
    count: u64,
}

impl AverageState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sum of the observations consumed so far.
    pub fn total(&self) -> f64 {
        self.mean * self.count as f64
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    pub fn update(&mut self, z: f64) -> Result<f64> {
        let z = finite(z)?;
        self.count += 1;
        self.mean += (z - self.mean) / self.count as f64;
        Ok(self.mean)
    }
}

pub fn kalman_init(x0: f64, params: &FilterParams) -> Result<KalmanState> {
    KalmanState::new(x0, params)
}

pub fn kalman_step(state: KalmanState, z: f64) -> Result<(KalmanState, f64)> {
    let mut next = state;
    let estimate = next.update(z)?;
    Ok((next, estimate))
}

pub fn average_step(state: AverageState, z: f64) -> Result<(AverageState, f64)> {
    let mut next = state;
    let estimate = next.update(z)?;
    Ok((next, estimate))
}

#[derive(Clone, Copy, Debug)]
enum Axis {
    Pending,
    Kalman(KalmanState),
    Average(AverageState),
}

impl Axis {
    fn update(&mut self, z: f64, params: &FilterParams) -> Result<f64> {
        if let Axis::Pending = self {
            *self = match params.kind {
                FilterKind::Kalman => Axis::Kalman(KalmanState::new(z, params)?),
                FilterKind::Average => Axis::Average(AverageState::new()),
            };
        }
        match self {
            Axis::Kalman(k) => k.update(z),
            Axis::Average(a) => a.update(z),
            Axis::Pending => unreachable!(),
        }
    }
}

/// Incremental two-axis filter. The first position seeds the Kalman
/// estimate and is then also consumed as the first observation.
///
/// Offline [`filter_trace`] and the live tracker both drive this type, so
/// they produce identical doubles for identical input.
#[derive(Clone, Debug)]
pub struct PositionFilter {
    params: FilterParams,
    lat: Axis,
    lon: Axis,
    consumed: usize,
}

impl PositionFilter {
    pub fn new(params: FilterParams) -> Result<Self> {
        params.validate()?;
        Ok(PositionFilter {
            params,
            lat: Axis::Pending,
            lon: Axis::Pending,
            consumed: 0,
        })
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn push(&mut self, observed: GeoPosition) -> Result<GeoPosition> {
        let lat = self.lat.update(observed.lat(), &self.params)?;
        let lon = self.lon.update(observed.lon(), &self.params)?;
        self.consumed += 1;
        GeoPosition::new(lat, lon)
    }
}

/// Filters every fix of `trace`, returning one estimate per fix.
pub fn filter_trace(trace: &Trace, params: &FilterParams) -> Result<Vec<GeoPosition>> {
    filter_positions(trace.fixes().iter().map(|f| f.position), params)
}

pub fn filter_positions<I>(positions: I, params: &FilterParams) -> Result<Vec<GeoPosition>>
where
    I: IntoIterator<Item = GeoPosition>,
{
    let mut filter = PositionFilter::new(*params)?;
    let out = positions
        .into_iter()
        .map(|p| filter.push(p))
        .collect::<Result<Vec<_>>>()?;
    if out.is_empty() {
        return Err(Error::EmptyInput("trace has no fixes"));
    }
    Ok(out)
}
