//! NMEA-0183 GGA and RMC sentences.
//!
//! Coordinates travel as `ddmm.mmmm` with a hemisphere letter. When the
//! minutes carry at most eleven decimals the conversion to degrees is done
//! in integers followed by a single division, so a value written by
//! [`format_gga`] reads back as the identical `f64`.

use std::io::BufRead;

use chrono::{NaiveDate, NaiveTime, Timelike};

use super::{GpsFix, Trace};
use crate::error::{Error, Result};
use crate::geodesy::GeoPosition;

/// XOR of every payload byte as two uppercase hex digits.
pub fn nmea_checksum(payload: &[u8]) -> String {
    format!("{:02X}", payload.iter().fold(0u8, |acc, b| acc ^ b))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GgaFix {
    pub time: Option<NaiveTime>,
    pub position: GeoPosition,
    pub quality: u8,
    pub satellites: u32,
    pub hdop: Option<f64>,
    pub altitude_m: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RmcFix {
    pub time: Option<NaiveTime>,
    pub date: Option<NaiveDate>,
    pub position: GeoPosition,
    pub speed_knots: Option<f64>,
    pub course_deg: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sentence {
    Gga(GgaFix),
    Rmc(RmcFix),
}

/// Splits a framed sentence into its comma-separated fields after checking
/// the checksum. Field 0 is the address (`GPGGA`, `GNRMC`, ...).
fn unframe(line: &str) -> Result<Vec<&str>> {
    let line = line.trim_end_matches(['\r', '\n']);
    let body = line
        .strip_prefix('$')
        .ok_or_else(|| Error::Sentence("missing leading `$`".into()))?;
    let (payload, checksum) = body
        .rsplit_once('*')
        .ok_or_else(|| Error::Sentence("missing `*` checksum delimiter".into()))?;
    if payload.contains(['$', '*']) {
        return Err(Error::Sentence("stray `$` or `*` in payload".into()));
    }
    let computed = nmea_checksum(payload.as_bytes());
    if !checksum.eq_ignore_ascii_case(&computed) {
        return Err(Error::Checksum {
            found: checksum.to_string(),
            computed,
        });
    }
    let fields: Vec<&str> = payload.split(',').collect();
    let address = fields[0];
    if address.len() < 5 || !address.bytes().all(|b| b.is_ascii_alphanumeric()) {
        return Err(Error::Field {
            index: 0,
            reason: format!("bad address `{address}`"),
        });
    }
    Ok(fields)
}

fn field<'a>(fields: &[&'a str], index: usize) -> Result<&'a str> {
    fields.get(index).copied().ok_or_else(|| Error::Field {
        index,
        reason: "missing".into(),
    })
}

fn bad(index: usize, reason: impl Into<String>) -> Error {
    Error::Field {
        index,
        reason: reason.into(),
    }
}

fn optional_f64(fields: &[&str], index: usize) -> Result<Option<f64>> {
    match fields.get(index).copied().unwrap_or("") {
        "" => Ok(None),
        v => v
            .parse()
            .map(Some)
            .map_err(|_| bad(index, format!("`{v}` is not a number"))),
    }
}

fn parse_time(fields: &[&str], index: usize) -> Result<Option<NaiveTime>> {
    let v = field(fields, index)?;
    if v.is_empty() {
        return Ok(None);
    }
    let err = || bad(index, format!("bad time `{v}`"));
    if v.len() < 6 || !v.is_char_boundary(6) {
        return Err(err());
    }
    let (hms, frac) = v.split_at(6);
    let num = |s: &str| s.parse::<u32>().map_err(|_| err());
    let (h, m, s) = (num(&hms[0..2])?, num(&hms[2..4])?, num(&hms[4..6])?);
    let nanos = match frac.strip_prefix('.') {
        None if frac.is_empty() => 0,
        None => return Err(err()),
        Some(digits) => {
            let seconds: f64 = format!("0.{digits}").parse().map_err(|_| err())?;
            (seconds * 1e9).round() as u32
        }
    };
    NaiveTime::from_hms_nano_opt(h, m, s, nanos.min(999_999_999))
        .map(Some)
        .ok_or_else(err)
}

fn parse_date(fields: &[&str], index: usize) -> Result<Option<NaiveDate>> {
    let v = field(fields, index)?;
    if v.is_empty() {
        return Ok(None);
    }
    NaiveDate::parse_from_str(v, "%d%m%y")
        .map(Some)
        .map_err(|_| bad(index, format!("bad date `{v}`")))
}

/// Converts `ddmm.mmmm` (or `dddmm.mmmm`) and its hemisphere letter.
fn parse_coordinate(value: &str, hemisphere: &str, index: usize, positive: char, negative: char) -> Result<f64> {
    let err = |why: &str| bad(index, format!("{why} in `{value}`"));
    let (int_part, frac_part) = value.split_once('.').unwrap_or((value, ""));
    if int_part.len() < 3
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(err("expected ddmm.mmmm"));
    }
    let whole: u64 = int_part.parse().map_err(|_| err("too many digits"))?;
    let (degrees, minutes) = (whole / 100, whole % 100);
    if minutes >= 60 {
        return Err(err("minutes >= 60"));
    }

    let k = frac_part.len();
    let abs = if k <= 11 {
        let scale = 10u64.pow(k as u32);
        let frac: u64 = if k == 0 { 0 } else { frac_part.parse().map_err(|_| err("bad fraction"))? };
        let scaled_minutes = (degrees * 60 + minutes)
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac))
            .filter(|&v| v < (1u64 << 53))
            .ok_or_else(|| err("out of range"))?;
        scaled_minutes as f64 / (60 * scale) as f64
    } else {
        let mm: f64 = format!("{minutes}.{frac_part}").parse().map_err(|_| err("bad minutes"))?;
        degrees as f64 + mm / 60.0
    };

    let h = hemisphere.chars().next();
    match (h, hemisphere.len()) {
        (Some(c), 1) if c == positive => Ok(abs),
        (Some(c), 1) if c == negative => Ok(-abs),
        _ => Err(bad(index + 1, format!("bad hemisphere `{hemisphere}`"))),
    }
}

fn parse_position(fields: &[&str], lat_index: usize) -> Result<GeoPosition> {
    let lat = parse_coordinate(
        field(fields, lat_index)?,
        field(fields, lat_index + 1)?,
        lat_index,
        'N',
        'S',
    )?;
    let lon = parse_coordinate(
        field(fields, lat_index + 2)?,
        field(fields, lat_index + 3)?,
        lat_index + 2,
        'E',
        'W',
    )?;
    GeoPosition::new(lat, lon).map_err(|e| bad(lat_index, e.to_string()))
}

fn sentence_type<'a>(fields: &[&'a str]) -> &'a str {
    let address = fields[0];
    &address[address.len() - 3..]
}

fn gga_from_fields(fields: &[&str]) -> Result<GgaFix> {
    let time = parse_time(fields, 1)?;
    let position = parse_position(fields, 2)?;
    let quality_raw = field(fields, 6)?;
    let quality: u8 = quality_raw
        .parse()
        .map_err(|_| bad(6, format!("bad fix quality `{quality_raw}`")))?;
    if quality == 0 {
        return Err(Error::NoFix);
    }
    let sats_raw = field(fields, 7)?;
    let satellites = if sats_raw.is_empty() {
        0
    } else {
        sats_raw
            .parse()
            .map_err(|_| bad(7, format!("bad satellite count `{sats_raw}`")))?
    };
    Ok(GgaFix {
        time,
        position,
        quality,
        satellites,
        hdop: optional_f64(fields, 8)?,
        altitude_m: optional_f64(fields, 9)?,
    })
}

fn rmc_from_fields(fields: &[&str]) -> Result<RmcFix> {
    match field(fields, 2)? {
        "A" => {}
        "V" => return Err(Error::NoFix),
        other => return Err(bad(2, format!("bad status `{other}`"))),
    }
    Ok(RmcFix {
        time: parse_time(fields, 1)?,
        position: parse_position(fields, 3)?,
        speed_knots: optional_f64(fields, 7)?,
        course_deg: optional_f64(fields, 8)?,
        date: parse_date(fields, 9)?,
    })
}

/// Parses any supported sentence. Other valid sentence types yield
/// [`Error::UnsupportedSentence`].
pub fn parse_sentence(line: &str) -> Result<Sentence> {
    let fields = unframe(line)?;
    match sentence_type(&fields) {
        "GGA" => gga_from_fields(&fields).map(Sentence::Gga),
        "RMC" => rmc_from_fields(&fields).map(Sentence::Rmc),
        _ => Err(Error::UnsupportedSentence(fields[0].to_string())),
    }
}

/// Parses a GGA sentence into a fix with `record_id` 0; the caller numbers it.
pub fn parse_gga(line: &str) -> Result<GpsFix> {
    let fields = unframe(line)?;
    if sentence_type(&fields) != "GGA" {
        return Err(Error::UnsupportedSentence(fields[0].to_string()));
    }
    let gga = gga_from_fields(&fields)?;
    Ok(GpsFix {
        record_id: 0,
        position: gga.position,
        satellites: gga.satellites,
        timestamp: gga.time,
        published_error_m: None,
    })
}

pub fn parse_rmc(line: &str) -> Result<RmcFix> {
    let fields = unframe(line)?;
    if sentence_type(&fields) != "RMC" {
        return Err(Error::UnsupportedSentence(fields[0].to_string()));
    }
    rmc_from_fields(&fields)
}

/// Renders `|value|` as `d..dmm.mmmm` with `width` degree digits.
fn format_coordinate(value: f64, width: usize) -> String {
    let abs = value.abs();
    // Shortest round-trip decimal; f64 Display never uses exponents.
    let text = abs.to_string();
    let (int_part, frac_part) = text.split_once('.').unwrap_or((&text, ""));
    if frac_part.len() <= 9 {
        let k = frac_part.len().max(4);
        let scale = 10u64.pow(k as u32);
        let frac: u64 = format!("{frac_part:0<k$}").parse().expect("digits");
        let scaled = frac * 60;
        let (minutes, minute_frac) = (scaled / scale, scaled % scale);
        format!("{int_part:0>width$}{minutes:02}.{minute_frac:0k$}")
    } else {
        let mut degrees = abs.trunc() as u64;
        let mut minutes = format!("{:010.7}", (abs - abs.trunc()) * 60.0);
        if minutes.starts_with("60") {
            degrees += 1;
            minutes = "00.0000000".to_string();
        }
        format!("{degrees:0width$}{minutes}")
    }
}

fn format_time(t: NaiveTime) -> String {
    let centis = t.nanosecond().min(999_999_999) / 10_000_000;
    format!("{:02}{:02}{:02}.{:02}", t.hour(), t.minute(), t.second(), centis)
}

/// Writes a `$GPGGA` sentence for `fix`, checksum included, without the
/// trailing CRLF.
pub fn format_gga(fix: &GpsFix) -> String {
    let lat = fix.position.lat();
    let lon = fix.position.lon();
    let payload = format!(
        "GPGGA,{},{},{},{},{},1,{:02},,,M,,M,,",
        fix.timestamp.map(format_time).unwrap_or_default(),
        format_coordinate(lat, 2),
        if lat < 0.0 { 'S' } else { 'N' },
        format_coordinate(lon, 3),
        if lon < 0.0 { 'W' } else { 'E' },
        fix.satellites,
    );
    let checksum = nmea_checksum(payload.as_bytes());
    format!("${payload}*{checksum}")
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub fixes: usize,
    /// Checksum failures and malformed lines.
    pub corrupted: usize,
    /// Valid sentences that carry no fix for the trace (RMC, GSV, ...).
    pub skipped: usize,
    /// Sentences in which the receiver reports no position solution.
    pub no_fix: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LineOutcome {
    Fix(GpsFix),
    Skipped,
    NoFix,
    Corrupted(String),
    Blank,
}

/// Turns a stream of NMEA lines into numbered fixes. GGA sentences become
/// fixes with record ids assigned by arrival order; everything else is
/// counted.
#[derive(Clone, Debug, Default)]
pub struct FixAssembler {
    next_id: u32,
    stats: IngestStats,
}

impl FixAssembler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    pub fn accept(&mut self, line: &str) -> LineOutcome {
        if line.trim().is_empty() {
            return LineOutcome::Blank;
        }
        match parse_sentence(line) {
            Ok(Sentence::Gga(gga)) => {
                let fix = GpsFix {
                    record_id: self.next_id,
                    position: gga.position,
                    satellites: gga.satellites,
                    timestamp: gga.time,
                    published_error_m: None,
                };
                self.next_id += 1;
                self.stats.fixes += 1;
                LineOutcome::Fix(fix)
            }
            Ok(Sentence::Rmc(_)) | Err(Error::UnsupportedSentence(_)) => {
                self.stats.skipped += 1;
                LineOutcome::Skipped
            }
            Err(Error::NoFix) => {
                self.stats.no_fix += 1;
                LineOutcome::NoFix
            }
            Err(e) => {
                self.stats.corrupted += 1;
                LineOutcome::Corrupted(e.to_string())
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct NmeaLog {
    pub trace: Trace,
    pub stats: IngestStats,
}

/// Reads a whole NMEA log into a trace.
pub fn read_nmea<R: BufRead>(mut reader: R, reference: GeoPosition) -> Result<NmeaLog> {
    let mut assembler = FixAssembler::new();
    let mut fixes = Vec::new();
    let mut buf = Vec::new();
    let mut line_no = 0usize;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let line = String::from_utf8_lossy(&buf);
        match assembler.accept(&line) {
            LineOutcome::Fix(fix) => fixes.push(fix),
            LineOutcome::Corrupted(why) => log::warn!("line {line_no}: {why}"),
            LineOutcome::Skipped => log::debug!("line {line_no}: sentence skipped"),
            LineOutcome::NoFix | LineOutcome::Blank => {}
        }
    }
    Ok(NmeaLog {
        trace: Trace::new(fixes, reference, "")?,
        stats: assembler.stats(),
    })
}
