//! Acceptance suite for the clear-weather reproduction. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};

use geotrack::ingest::{format_gga, nmea_checksum, parse_gga, parse_trace_csv};
use geotrack::stream::{ReplayConfig, ReplayServer, TrackSession};
use geotrack::{
    average_step, bundled, error_series, filter_trace, haversine_distance, improvement_rate,
    kalman_init, kalman_step, summarize, AverageState, FilterKind, FilterParams, GeoPosition,
    GpsFix, KalmanState,
};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($fmt)+));
        }
    };
}

const MARGIN_TOL_M: f64 = 0.15;
const END_TO_END_TOL_M: f64 = 0.1;
const RATE_TOL_PCT: f64 = 0.05;
const RANDOM_CASES: usize = 1000;

fn reference() -> GeoPosition {
    GeoPosition::new(39.9525646, 32.7966589).unwrap()
}

fn published_margins() -> Vec<f64> {
    bundled::clear_weather()
        .fixes()
        .iter()
        .map(|f| f.published_error_m.expect("bundled file carries margins"))
        .collect()
}

fn c1_error_margin_column() -> Outcome {
    let trace = bundled::clear_weather();
    let published = published_margins();
    let mut worst = (0usize, 0.0f64);
    let mut failures = Vec::new();
    for (fix, &expected) in trace.fixes().iter().zip(&published) {
        let d = haversine_distance(fix.position, reference());
        let dev = (d - expected).abs();
        if dev > worst.1 {
            worst = (fix.record_id as usize, dev);
        }
        if dev > MARGIN_TOL_M {
            failures.push(format!("record {} computed {d:.2} published {expected:.2}", fix.record_id));
        }
    }
    ensure!(trace.len() == 30, "expected 30 records, got {}", trace.len());
    ensure!(failures.is_empty(), "{} of 30 outside ±{MARGIN_TOL_M} m: {}", failures.len(), failures.join("; "));
    Ok(format!("30/30 within ±{MARGIN_TOL_M} m (worst record {} off {:.3} m)", worst.0, worst.1))
}

fn c2_kalman_worked_example() -> Outcome {
    let params = FilterParams::default();
    let s0 = kalman_init(39.953250, &params).map_err(|e| e.to_string())?;
    let (s1, x0) = kalman_step(s0, 39.953250).map_err(|e| e.to_string())?;
    ensure!(s1.gain() == Some(0.8), "k=0 gain {:?}", s1.gain());
    ensure!(x0 == 39.953250, "k=0 estimate {x0}");
    ensure!(s1.covariance() == 0.8, "k=0 covariance {}", s1.covariance());
    let (s2, x1) = kalman_step(s1, 39.953200).map_err(|e| e.to_string())?;
    ensure!((x1 - 39.953228).abs() <= 1e-6, "k=1 estimate {x1}");
    // Rounding K1 to 0.44 would give P1 = 0.448; unrounded arithmetic gives
    // K1 = P1 = 0.8 / 1.8 = 0.4444...
    ensure!((s2.covariance() - 0.8 / 1.8).abs() < 1e-15, "k=1 covariance {}", s2.covariance());
    Ok(format!("K0=0.8 X0={x0} P0=0.8; X1={x1:.7} P1={:.4}", s2.covariance()))
}

fn c3_average_worked_example() -> Outcome {
    let (s, v0) = average_step(AverageState::new(), 39.953250).map_err(|e| e.to_string())?;
    let (_, v1) = average_step(s, 39.953200).map_err(|e| e.to_string())?;
    ensure!(v0 == 39.953250, "first value {v0}");
    ensure!(v1 == 39.953225, "second value {v1}");
    Ok(format!("{v0}, {v1}"))
}

fn filtered_summary(kind: FilterKind) -> Result<geotrack::ErrorSummary, String> {
    let trace = bundled::clear_weather();
    let filtered = filter_trace(&trace, &FilterParams::with_kind(kind)).map_err(|e| e.to_string())?;
    let series = error_series(&filtered, trace.reference(), kind.label()).map_err(|e| e.to_string())?;
    summarize(&series, None).map_err(|e| e.to_string())
}

fn c4_kalman_end_to_end() -> Outcome {
    let s = filtered_summary(FilterKind::Kalman)?;
    ensure!((s.final_m - 3.64).abs() <= END_TO_END_TOL_M, "final {:.3} m", s.final_m);
    ensure!((s.min_m - 3.47).abs() <= END_TO_END_TOL_M, "min {:.3} m", s.min_m);
    ensure!(matches!(s.min_index, 20 | 21), "min index {}", s.min_index);
    Ok(format!("final {:.2} m, min {:.2} m at index {}", s.final_m, s.min_m, s.min_index))
}

fn c5_average_end_to_end() -> Outcome {
    let s = filtered_summary(FilterKind::Average)?;
    ensure!((s.final_m - 4.18).abs() <= END_TO_END_TOL_M, "final {:.3} m", s.final_m);
    let trace = bundled::clear_weather();
    let receiver_final = haversine_distance(trace.fixes()[29].position, trace.reference());
    let benefit = receiver_final - s.final_m;
    ensure!((benefit - 5.21).abs() <= MARGIN_TOL_M, "benefit {benefit:.3} m");
    Ok(format!("final {:.2} m, benefit {benefit:.2} m", s.final_m))
}

fn c6_improvement_rates() -> Outcome {
    let cases = [
        ("clear kalman", 9.39, 3.47, 63.04),
        ("clear average", 9.39, 4.18, 55.48),
        ("cloudy kalman", 19.50, 11.76, 39.69),
        ("cloudy average", 19.50, 12.29, 36.97),
    ];
    let mut got = Vec::new();
    for (name, b, f, expected) in cases {
        let pct = improvement_rate(b, f).map_err(|e| e.to_string())?;
        ensure!((pct - expected).abs() <= RATE_TOL_PCT, "{name}: {pct:.3}% vs {expected}%");
        got.push(format!("{name} {pct:.2}%"));
    }
    Ok(got.join(", "))
}

fn c7_closed_form_oracles() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0x6a75_7374);
    let mut worst_kalman = 0.0f64;
    let mut worst_avg = 0.0f64;
    for case in 0..RANDOM_CASES {
        let x0: f64 = rng.gen_range(-180.0..180.0);
        let p0: f64 = rng.gen_range(0.01..100.0);
        let r: f64 = rng.gen_range(0.01..100.0);
        let n = rng.gen_range(1..100);
        let zs: Vec<f64> = (0..n).map(|_| x0 + rng.gen_range(-1.0..1.0)).collect();

        let params = FilterParams { r, p0, kind: FilterKind::Kalman };
        let mut k = KalmanState::new(x0, &params).map_err(|e| e.to_string())?;
        let mut avg = AverageState::new();
        let (mut info, mut weighted) = (1.0 / p0, x0 / p0);
        for (i, &z) in zs.iter().enumerate() {
            let x = k.update(z).map_err(|e| e.to_string())?;
            info += 1.0 / r;
            weighted += z / r;
            let closed = weighted / info;
            let rel = (x - closed).abs() / closed.abs().max(1.0);
            worst_kalman = worst_kalman.max(rel);
            ensure!(rel <= 1e-9, "case {case} step {i}: kalman {x} vs closed form {closed}");

            let m = avg.update(z).map_err(|e| e.to_string())?;
            let fresh = zs[..=i].iter().sum::<f64>() / (i + 1) as f64;
            let rel = (m - fresh).abs() / fresh.abs().max(1.0);
            worst_avg = worst_avg.max(rel);
            ensure!(rel <= 1e-12, "case {case} step {i}: average {m} vs prefix mean {fresh}");
        }
    }
    Ok(format!(
        "{RANDOM_CASES} cases; worst relative error kalman {worst_kalman:.1e}, average {worst_avg:.1e}"
    ))
}

fn c8_parser_properties() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(8);
    for _ in 0..RANDOM_CASES {
        let pos = GeoPosition::new(rng.gen_range(-89.9..89.9), rng.gen_range(-179.9..179.9))
            .map_err(|e| e.to_string())?;
        let line = format_gga(&GpsFix::new(0, pos, rng.gen_range(0..30)));
        let back = parse_gga(&line).map_err(|e| format!("{line}: {e}"))?;
        ensure!(
            (back.position.lat() - pos.lat()).abs() <= 1e-7 && (back.position.lon() - pos.lon()).abs() <= 1e-7,
            "round trip {pos} -> {}",
            back.position
        );

        let payload: Vec<u8> = (0..rng.gen_range(1..80)).map(|_| rng.gen_range(0x20u8..0x7f)).collect();
        let mut corrupted = payload.clone();
        let i = rng.gen_range(0..corrupted.len());
        corrupted[i] ^= rng.gen_range(1u8..=255);
        ensure!(nmea_checksum(&payload) != nmea_checksum(&corrupted), "checksum blind to corruption");

        // Single-byte corruption of a sentence payload must fail to parse.
        let mut bytes = line.clone().into_bytes();
        let star = line.rfind('*').unwrap();
        let j = rng.gen_range(1..star);
        let mut replacement = rng.gen_range(0x20u8..0x7f);
        while replacement == bytes[j] {
            replacement = rng.gen_range(0x20u8..0x7f);
        }
        bytes[j] = replacement;
        let mangled = String::from_utf8(bytes).unwrap();
        ensure!(parse_gga(&mangled).is_err(), "corrupted sentence accepted: {mangled}");
    }

    let trace = parse_trace_csv(bundled::CLEAR_WEATHER_CSV.as_bytes(), reference()).map_err(|e| e.to_string())?;
    let sats: Vec<u32> = trace.fixes().iter().map(|f| f.satellites).collect();
    ensure!(trace.len() == 30, "{} fixes", trace.len());
    ensure!(sats.windows(2).all(|w| w[0] <= w[1]), "satellites not monotone: {sats:?}");
    ensure!(sats[0] == 3 && sats[29] == 14, "satellites run {}..{}", sats[0], sats[29]);
    Ok(format!("{RANDOM_CASES} round trips, {RANDOM_CASES} corruptions detected, 30 fixes with satellites 3..14"))
}

fn c9_online_offline_equivalence() -> Outcome {
    let trace = bundled::clear_weather();
    let cfg = ReplayConfig {
        rate_hz: 500.0,
        loop_forever: false,
        listen: "127.0.0.1:0".into(),
    };
    let handle = ReplayServer::bind(&trace, &cfg).map_err(|e| e.to_string())?.spawn();
    let params = FilterParams::default();
    let mut session = TrackSession::new(handle.local_addr().to_string(), params, trace.reference());
    let live = session.run(None).map_err(|e| e.to_string())?;
    handle.stop().map_err(|e| e.to_string())?;

    let offline = filter_trace(&trace, &params).map_err(|e| e.to_string())?;
    let online = &live.bundle.track(FilterKind::Kalman).ok_or("no kalman track")?.positions;
    ensure!(online.len() == offline.len(), "{} live vs {} offline", online.len(), offline.len());
    for (i, (a, b)) in online.iter().zip(&offline).enumerate() {
        ensure!(a == b, "record {i}: live {a} vs offline {b}");
    }
    let s = live.bundle.track(FilterKind::Kalman).unwrap().summary;
    ensure!((s.min_m - 3.47).abs() <= END_TO_END_TOL_M && matches!(s.min_index, 20 | 21), "live min {:.3} at {}", s.min_m, s.min_index);
    ensure!((s.final_m - 3.64).abs() <= END_TO_END_TOL_M, "live final {:.3}", s.final_m);
    Ok(format!("30 positions bit-identical; min {:.2} m at {}, final {:.2} m", s.min_m, s.min_index, s.final_m))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 error-margin column reproduction", c1_error_margin_column),
        ("2 kalman worked example", c2_kalman_worked_example),
        ("3 average worked example", c3_average_worked_example),
        ("4 kalman end-to-end", c4_kalman_end_to_end),
        ("5 average end-to-end", c5_average_end_to_end),
        ("6 improvement rates", c6_improvement_rates),
        ("7 closed-form oracles", c7_closed_form_oracles),
        ("8 parser properties", c8_parser_properties),
        ("9 online/offline equivalence", c9_online_offline_equivalence),
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
