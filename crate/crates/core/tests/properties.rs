use geotrack::{
    filter_positions, haversine_distance, AverageState, FilterKind, FilterParams, GeoPosition,
    KalmanState,
};
use proptest::prelude::*;

/// Fusion of a prior (x0, p0) with n+1 measurements of variance r, solved
/// directly instead of through the recursion.
fn fused_estimate(x0: f64, p0: f64, r: f64, zs: &[f64]) -> f64 {
    let info = 1.0 / p0 + zs.len() as f64 / r;
    let weighted = x0 / p0 + zs.iter().sum::<f64>() / r;
    weighted / info
}

fn fused_covariance(p0: f64, r: f64, steps: usize) -> f64 {
    1.0 / (1.0 / p0 + steps as f64 / r)
}

fn prefix_mean(zs: &[f64]) -> f64 {
    zs.iter().sum::<f64>() / zs.len() as f64
}

fn scale(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

fn position() -> impl Strategy<Value = GeoPosition> {
    (-89.0f64..89.0, -179.0f64..179.0).prop_map(|(a, b)| GeoPosition::new(a, b).unwrap())
}

fn local_position(lat0: f64, lon0: f64) -> impl Strategy<Value = GeoPosition> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(move |(a, b)| GeoPosition::new(lat0 + a, lon0 + b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn kalman_matches_closed_form(
        x0 in -100.0f64..100.0,
        p0 in 0.01f64..100.0,
        r in 0.01f64..100.0,
        zs in proptest::collection::vec(-100.0f64..100.0, 1..60),
    ) {
        let params = FilterParams { r, p0, kind: FilterKind::Kalman };
        let mut state = KalmanState::new(x0, &params).unwrap();
        let tol = 1e-9 * scale(&zs).max(x0.abs());
        for (k, &z) in zs.iter().enumerate() {
            let x = state.update(z).unwrap();
            let expected = fused_estimate(x0, p0, r, &zs[..=k]);
            prop_assert!((x - expected).abs() <= tol, "step {k}: {x} vs {expected}");
            let p = state.covariance();
            let expected_p = fused_covariance(p0, r, k + 1);
            prop_assert!((p - expected_p).abs() <= 1e-12 * expected_p, "step {k}: {p} vs {expected_p}");
        }
    }

    #[test]
    fn average_matches_fresh_prefix_means(zs in proptest::collection::vec(-180.0f64..180.0, 1..100)) {
        let mut state = AverageState::new();
        let tol = 1e-12 * scale(&zs);
        for k in 0..zs.len() {
            let v = state.update(zs[k]).unwrap();
            let expected = prefix_mean(&zs[..=k]);
            prop_assert!((v - expected).abs() <= tol, "step {k}: {v} vs {expected}");
        }
        prop_assert_eq!(state.count(), zs.len() as u64);
    }

    #[test]
    fn gain_in_unit_interval_and_covariance_decreasing(
        x0 in -90.0f64..90.0,
        p0 in 1e-3f64..1e3,
        r in 1e-3f64..1e3,
        zs in proptest::collection::vec(-90.0f64..90.0, 1..40),
    ) {
        let params = FilterParams { r, p0, kind: FilterKind::Kalman };
        let mut state = KalmanState::new(x0, &params).unwrap();
        let (mut lo, mut hi) = (x0, x0);
        let mut prev_p = state.covariance();
        for &z in &zs {
            lo = lo.min(z);
            hi = hi.max(z);
            let x = state.update(z).unwrap();
            let gain = state.gain().unwrap();
            prop_assert!(gain > 0.0 && gain < 1.0);
            prop_assert!(state.covariance() < prev_p);
            prop_assert!(state.covariance() > 0.0);
            prop_assert!(lo <= x && x <= hi, "{x} outside [{lo}, {hi}]");
            prev_p = state.covariance();
        }
    }

    #[test]
    fn average_stays_within_observed_range(zs in proptest::collection::vec(-90.0f64..90.0, 1..60)) {
        let mut state = AverageState::new();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &z in &zs {
            lo = lo.min(z);
            hi = hi.max(z);
            let v = state.update(z).unwrap();
            prop_assert!(lo <= v && v <= hi);
        }
    }

    #[test]
    fn latitude_estimates_ignore_longitudes(
        lats in proptest::collection::vec(39.0f64..41.0, 2..40),
        seed in any::<u64>(),
    ) {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let lons: Vec<f64> = (0..lats.len()).map(|_| rng.gen_range(32.0..33.0)).collect();
        let mut permuted = lons.clone();
        permuted.shuffle(&mut rng);

        for kind in [FilterKind::Kalman, FilterKind::Average] {
            let params = FilterParams::with_kind(kind);
            let run = |lons: &[f64]| {
                let pts = lats.iter().zip(lons).map(|(&a, &b)| GeoPosition::new(a, b).unwrap());
                filter_positions(pts, &params).unwrap()
            };
            let a: Vec<f64> = run(&lons).iter().map(GeoPosition::lat).collect();
            let b: Vec<f64> = run(&permuted).iter().map(GeoPosition::lat).collect();
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #[test]
    fn haversine_is_symmetric(a in position(), b in position()) {
        prop_assert_eq!(haversine_distance(a, b), haversine_distance(b, a));
        prop_assert_eq!(haversine_distance(a, a), 0.0);
        prop_assert!(haversine_distance(a, b) >= 0.0);
    }

    #[test]
    fn haversine_triangle_inequality_locally(
        a in local_position(39.5, 32.5),
        b in local_position(39.5, 32.5),
        c in local_position(39.5, 32.5),
    ) {
        let direct = haversine_distance(a, c);
        let via = haversine_distance(a, b) + haversine_distance(b, c);
        prop_assert!(direct <= via + 1e-6, "{direct} > {via}");
    }
}
