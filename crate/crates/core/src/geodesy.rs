//! Positions and great-circle distance.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius of the spherical model, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A latitude/longitude pair in decimal degrees.
///
/// Construction validates range and finiteness, so every distance
/// computation downstream is total.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPosition", into = "RawPosition")]
pub struct GeoPosition {
    lat_deg: f64,
    lon_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPosition {
    lat_deg: f64,
    lon_deg: f64,
}

impl TryFrom<RawPosition> for GeoPosition {
    type Error = Error;

    fn try_from(raw: RawPosition) -> Result<Self> {
        GeoPosition::new(raw.lat_deg, raw.lon_deg)
    }
}

impl From<GeoPosition> for RawPosition {
    fn from(p: GeoPosition) -> Self {
        RawPosition {
            lat_deg: p.lat_deg,
            lon_deg: p.lon_deg,
        }
    }
}

impl GeoPosition {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self> {
        if !lat_deg.is_finite() || !lon_deg.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "non-finite coordinate ({lat_deg}, {lon_deg})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat_deg) {
            return Err(Error::Validation(format!("latitude {lat_deg} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon_deg) {
            return Err(Error::Validation(format!(
                "longitude {lon_deg} outside [-180, 180]"
            )));
        }
        Ok(GeoPosition { lat_deg, lon_deg })
    }

    pub fn lat(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon(&self) -> f64 {
        self.lon_deg
    }

    pub fn distance_to(&self, other: &GeoPosition) -> f64 {
        haversine_distance(*self, *other)
    }
}

impl fmt::Display for GeoPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lat_deg, self.lon_deg)
    }
}

impl std::str::FromStr for GeoPosition {
    type Err = Error;

    /// Parses `lat,lon` in decimal degrees.
    fn from_str(s: &str) -> Result<Self> {
        let (lat, lon) = s
            .split_once(',')
            .ok_or_else(|| Error::InvalidArgument(format!("expected `lat,lon`, got `{s}`")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("`{v}`: {e}")))
        };
        GeoPosition::new(parse(lat)?, parse(lon)?)
    }
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
///
/// Symmetric bit-for-bit: the half-angle differences are taken as absolute
/// values and the cosine product commutes.
pub fn haversine_distance(a: GeoPosition, b: GeoPosition) -> f64 {
    let phi_a = a.lat_deg.to_radians();
    let phi_b = b.lat_deg.to_radians();
    let half_dphi = ((b.lat_deg - a.lat_deg).abs().to_radians() / 2.0).sin();
    let half_dlambda = ((b.lon_deg - a.lon_deg).abs().to_radians() / 2.0).sin();

    let h = half_dphi * half_dphi + phi_a.cos() * phi_b.cos() * half_dlambda * half_dlambda;
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}
