use proptest::prelude::*;
use smse_core::bounds::Combiner;
use smse_core::correlation::{correlation_for_device, SpacingPolicy};
use smse_core::geometry::{CellLayout, MomentSpec};
use smse_core::sweep::{
    best_n, evaluate_grid, evaluate_rate, optimize_n, tightness_random, Axis, Locations, MomentCache,
    OperatingPoint, SweepGrid, CANDIDATE_N,
};
use smse_core::ExperimentConfig;

fn spec() -> MomentSpec {
    MomentSpec { path_loss_exponent: 3.7, min_distance: 50.0, sample_count: 5000, seed: 1 }
}

fn uniform(cache: &MomentCache) -> Locations {
    let layout = CellLayout::hexagonal(500.0, 1).unwrap();
    Locations::Uniform {
        cell_radius: 500.0,
        moments: cache.load_or_compute(&layout, &spec()).unwrap(),
        fingerprint: spec().fingerprint(&layout),
    }
}

fn base() -> OperatingPoint {
    let mut p = ExperimentConfig::default().operating_point();
    p.device_mm = 1000.0;
    p
}

fn grid(axis: Axis, values: Vec<f64>) -> SweepGrid {
    SweepGrid {
        axis,
        values,
        series: Some((Axis::Omega, vec![1.0, 3.0])),
        base: base(),
        candidate_n: CANDIDATE_N.to_vec(),
        combiners: vec![Combiner::Zf],
    }
}

fn n_star_by_series(result: &smse_core::SweepResult, omega: f64) -> Vec<u32> {
    result
        .n_star
        .iter()
        .filter(|s| s.series_value == Some(omega))
        .map(|s| s.n_star.unwrap_or(0))
        .collect()
}

#[test]
fn moment_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cache = MomentCache::new(dir.path().join("moments"));
    let layout = CellLayout::hexagonal(500.0, 1).unwrap();
    let first = cache.load_or_compute(&layout, &spec()).unwrap();
    let path = cache.path_for(&spec().fingerprint(&layout));
    assert!(path.exists());
    let bytes = std::fs::read(&path).unwrap();
    let second = cache.load_or_compute(&layout, &spec()).unwrap();
    assert_eq!(first, second);
    assert_eq!(bytes, std::fs::read(&path).unwrap());
    std::fs::write(&path, "not json").unwrap();
    assert_eq!(cache.load_or_compute(&layout, &spec()).unwrap(), first);
    let other = MomentSpec { seed: 2, ..spec() };
    assert_ne!(other.fingerprint(&layout), spec().fingerprint(&layout));
}

#[test]
fn grid_rows_respect_feasibility_and_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let loc = uniform(&MomentCache::new(dir.path()));
    let mut g = grid(Axis::M, vec![20.0, 64.0, 160.0, 512.0, 1000.0]);
    g.combiners = vec![Combiner::Mr, Combiner::Zf];
    let result = evaluate_grid(&g, &loc).unwrap();
    assert_eq!(result.rows.len(), 2 * 5 * 5 * 2);
    assert_eq!(result.n_star.len(), 2 * 5 * 2);
    for row in &result.rows {
        let p = g.points().unwrap()[row.point].2;
        let r = &row.rate;
        let pilots_fit = p.omega * r.n * p.k < p.t;
        let rank_ok = r.combiner == Combiner::Mr || p.m > r.n * p.k;
        assert_eq!(r.feasible(), pilots_fit && rank_ok, "{row:?}");
        if r.feasible() {
            assert!((r.sum_rate - p.k as f64 * r.per_ue_rate).abs() <= 1e-12 * r.sum_rate);
        }
    }
    for s in &result.n_star {
        let rows: Vec<_> = result
            .rows
            .iter()
            .filter(|r| r.point == s.point && r.rate.combiner == s.combiner)
            .map(|r| r.rate)
            .collect();
        let best = best_n(&rows).unwrap();
        assert_eq!(s.n_star, Some(best.n));
        assert!(rows.iter().filter(|r| r.feasible()).all(|r| r.sum_rate <= s.sum_rate));
        if let Some(b) = s.baseline_sum_rate {
            assert!(s.sum_rate >= b);
        }
    }
}

#[test]
fn optimal_n_trends() {
    let dir = tempfile::tempdir().unwrap();
    let loc = uniform(&MomentCache::new(dir.path()));
    let by_k = evaluate_grid(&grid(Axis::K, (1..=50).step_by(7).map(f64::from).collect()), &loc).unwrap();
    let by_t = evaluate_grid(&grid(Axis::T, vec![50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0]), &loc).unwrap();
    let by_d = evaluate_grid(&grid(Axis::DeviceSize, vec![10.0, 30.0, 100.0, 300.0, 1000.0]), &loc).unwrap();
    for omega in [1.0, 3.0] {
        let k = n_star_by_series(&by_k, omega);
        assert!(k.windows(2).all(|w| w[0] >= w[1]), "K, omega {omega}: {k:?}");
        let t = n_star_by_series(&by_t, omega);
        assert!(t.windows(2).all(|w| w[0] <= w[1]), "T, omega {omega}: {t:?}");
        let d = n_star_by_series(&by_d, omega);
        assert!(d.windows(2).all(|w| w[0] <= w[1]), "D_m, omega {omega}: {d:?}");
    }
    for result in [&by_k, &by_t, &by_d] {
        let one = n_star_by_series(result, 1.0);
        let three = n_star_by_series(result, 3.0);
        assert!(one.iter().zip(&three).all(|(a, b)| a >= b), "{one:?} vs {three:?}");
    }
}

#[test]
fn short_frames_force_single_antenna() {
    let dir = tempfile::tempdir().unwrap();
    let loc = uniform(&MomentCache::new(dir.path()));
    let p = OperatingPoint { t: 40, k: 10, omega: 3, ..base() };
    let (n, rows) = optimize_n(&p, Combiner::Zf, &CANDIDATE_N, &loc).unwrap();
    assert_eq!(n, Some(1));
    assert!(rows.iter().filter(|r| r.n > 1).all(|r| !r.feasible()));
    let p = OperatingPoint { t: 30, ..p };
    let (n, rows) = optimize_n(&p, Combiner::Zf, &CANDIDATE_N, &loc).unwrap();
    assert_eq!(n, None);
    assert!(rows.iter().all(|r| r.infeasible.is_some()));
}

#[test]
fn sweeps_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cache = MomentCache::new(dir.path());
    let g = grid(Axis::M, vec![128.0, 512.0]);
    let a = evaluate_grid(&g, &uniform(&cache)).unwrap();
    let b = evaluate_grid(&g, &uniform(&cache)).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(a.moment_fingerprint, spec().fingerprint(&CellLayout::hexagonal(500.0, 1).unwrap()));
}

#[test]
fn location_average_sits_above_the_random_bound() {
    let layout = CellLayout::hexagonal(500.0, 3).unwrap();
    let moments = smse_core::geometry::spatial_moments(&layout, &MomentSpec { sample_count: 20_000, ..spec() }).unwrap();
    let corr = correlation_for_device(2, 100.0, 60.0, SpacingPolicy::MaxSpread, 10_000).unwrap();
    let params = base().params(2, Combiner::Mr);
    let row = tightness_random(&params, &layout, &moments, &corr, 3.7, 50.0, 20, 4, true).unwrap();
    assert_eq!(row.method, "location-average");
    assert!(row.simulated_sum_rate >= row.bound_sum_rate - 3.0 * row.simulated_std_error, "{row:?}");
    assert!(row.rel_gap.abs() < 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn rate_rows_match_their_flags(
        m in 8u32..600,
        k in 1u32..30,
        t in 20u32..600,
        log_n in 0u32..5,
        zf in any::<bool>(),
    ) {
        let loc = Locations::Ring { cell_radius: 500.0, radius: 275.0, path_loss_exponent: 3.7, min_distance: 50.0 };
        let p = OperatingPoint { m, k, t, omega: 3, ..base() };
        let n = 1 << log_n;
        let combiner = if zf { Combiner::Zf } else { Combiner::Mr };
        let r = evaluate_rate(&p, combiner, n, &loc).unwrap();
        let feasible = 3 * n * k < t && (!zf || m > n * k);
        prop_assert_eq!(r.feasible(), feasible);
        if feasible {
            prop_assert!(r.sum_rate > 0.0);
            prop_assert!((r.sum_rate - k as f64 * r.per_ue_rate).abs() <= 1e-12 * r.sum_rate);
        }
    }
}
