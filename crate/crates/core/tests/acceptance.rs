//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::time::Instant;

use num_complex::Complex64;
use smse_core::bounds::{
    detection_normalizer, detection_probability, detection_probability_integral,
    detection_probability_series, inv_sinr_fixed, inv_sinr_limit_fixed, se_bound, se_random_lb,
    sm_rate, Combiner, SystemParams,
};
use smse_core::config::{ExperimentConfig, Placement};
use smse_core::correlation::{correlation_for_device, optimize_spacing, SpacingPolicy};
use smse_core::geometry::{
    spatial_moments, CellLayout, InterferenceMoments, NetworkScenario, PlacementMode,
};
use smse_core::montecarlo::{detection_pc_oracle, pilot_sequence};
use smse_core::sweep::{
    evaluate_grid, optimize_n, tightness_report, Locations, NStar, SweepGrid, TightnessOptions,
};

const SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn table_one() -> ExperimentConfig {
    ExperimentConfig::default()
}

fn ring_scenario(cfg: &ExperimentConfig) -> NetworkScenario {
    let layout = CellLayout::hexagonal(cfg.geometry.cell_radius_m, cfg.system.omega).unwrap();
    NetworkScenario::new(
        layout,
        cfg.system.k as usize,
        PlacementMode::FixedRing { radius: cfg.geometry.ring_radius_m },
        cfg.geometry.path_loss_exponent,
        cfg.geometry.min_distance_m,
    )
    .unwrap()
}

fn uniform_locations(cfg: &ExperimentConfig) -> Locations {
    let layout = CellLayout::hexagonal(cfg.geometry.cell_radius_m, 1).unwrap();
    let spec = cfg.moment_spec();
    Locations::Uniform {
        cell_radius: cfg.geometry.cell_radius_m,
        moments: spatial_moments(&layout, &spec).unwrap(),
        fingerprint: spec.fingerprint(&layout),
    }
}

fn detection_vs_brute_force() -> Outcome {
    let mut worst = (0.0f64, 0, 0.0);
    let mut pass = true;
    for n in [2u32, 4, 8, 16] {
        for s in [0.1, 1.0, 4.0, 16.0, 100.0] {
            let closed = detection_probability(n, s).unwrap();
            let mc = detection_pc_oracle(n, s, 1_000_000, SEED).unwrap();
            let z = (closed - mc.value).abs() / mc.std_error;
            pass &= z <= 3.0;
            if z > worst.0 {
                worst = (z, n, s);
            }
        }
    }
    let exact = detection_probability(2, 2.0).unwrap();
    pass &= exact == 2.0 / 3.0;
    outcome(
        pass,
        format!(
            "worst |closed - oracle| = {:.2} SE at N={}, sigma^2={} (limit 3); P_c(2, 2) - 2/3 = {:e}",
            worst.0,
            worst.1,
            worst.2,
            exact - 2.0 / 3.0
        ),
    )
}

fn large_array_limits() -> Outcome {
    let cfg = table_one();
    let scen = ring_scenario(&cfg);
    let corr = correlation_for_device(2, 100.0, 60.0, SpacingPolicy::MaxSpread, 10_000).unwrap();
    let mut pass = true;
    let mut notes = Vec::new();
    for combiner in Combiner::ALL {
        let limit = inv_sinr_limit_fixed(combiner, &scen.layout, &scen.attenuation, &corr);
        let gap = |m: u32| -> Vec<f64> {
            let p = SystemParams { m, ..cfg.params(combiner) };
            let v = inv_sinr_fixed(&p, &scen.layout, &scen.attenuation, &corr).unwrap();
            v.inv_sinr
                .iter()
                .zip(&limit)
                .flat_map(|(row, l)| row.iter().map(move |x| (x - l).abs()))
                .collect()
        };
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for e in 12..20 {
            let a = gap(1 << e);
            let b = gap(1 << (e + 1));
            for (x, y) in a.iter().zip(&b) {
                let r = x / y;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let far = gap(1_000_000_000);
        let rel = far
            .iter()
            .zip(limit.iter().flat_map(|l| std::iter::repeat_n(*l, 2)))
            .map(|(g, l)| g / l)
            .fold(0.0, f64::max);
        pass &= lo >= 1.8 && hi <= 2.2 && rel < 1e-6;
        notes.push(format!("{combiner}: ratio in [{lo:.4}, {hi:.4}], relative gap at 1e9 = {rel:.3e}"));
    }
    outcome(pass, format!("{} (limits [1.8, 2.2], 1e-6)", notes.join("; ")))
}

fn tightness(combiner: Combiner) -> Outcome {
    let mut cfg = table_one();
    cfg.geometry.placement = Placement::Ring;
    let scen = ring_scenario(&cfg);
    let corr = correlation_for_device(2, 100.0, 60.0, SpacingPolicy::MaxSpread, 10_000).unwrap();
    let opts = TightnessOptions { draws: 10_000, mi_samples: 100_000, seed: SEED, min_draws: 1_000 };
    let mut pass = true;
    let mut notes = Vec::new();
    for m in [128u32, 256, 512] {
        let params = SystemParams { m, ..cfg.params(combiner) };
        let row = tightness_report(&params, &scen, &corr, &[combiner], &opts).unwrap().remove(0);
        let ordered = row.simulated_sum_rate >= row.bound_sum_rate - 3.0 * row.simulated_std_error;
        pass &= match combiner {
            Combiner::Mr => row.rel_gap.abs() <= 0.05,
            Combiner::Zf => ordered && row.rel_gap.abs() <= 0.15,
        };
        notes.push(format!(
            "M={m}: bound {:.3}, simulated {:.3} +- {:.3}, rel gap {:.2}%",
            row.bound_sum_rate,
            row.simulated_sum_rate,
            row.simulated_std_error,
            100.0 * row.rel_gap
        ));
    }
    let limit = match combiner {
        Combiner::Mr => "|rel| <= 5%",
        Combiner::Zf => "simulated >= bound - 3 SE and |rel| <= 15%",
    };
    outcome(pass, format!("{} ({limit})", notes.join("; ")))
}

/// Population moments of every UE in `draws`, cell by cell.
fn pooled_moments(draws: &[NetworkScenario]) -> InterferenceMoments {
    let cells = draws[0].cell_count();
    let mut m = InterferenceMoments {
        mean: vec![0.0; cells],
        mean_sq: vec![0.0; cells],
        variance: vec![0.0; cells],
        mean_std_error: vec![0.0; cells],
        mean_sq_std_error: vec![0.0; cells],
        sample_count: 0,
    };
    for j in 0..cells {
        let all: Vec<f64> = draws.iter().flat_map(|d| d.attenuation.mu_row(j).to_vec()).collect();
        let n = all.len() as f64;
        m.mean[j] = all.iter().sum::<f64>() / n;
        m.mean_sq[j] = all.iter().map(|x| x * x).sum::<f64>() / n;
        m.variance[j] = all.iter().map(|x| (x - m.mean[j]).powi(2)).sum::<f64>() / n;
        m.sample_count = all.len() as u64;
    }
    m
}

fn jensen_and_convexity() -> Outcome {
    let cfg = table_one();
    let layout = CellLayout::hexagonal(cfg.geometry.cell_radius_m, cfg.system.omega).unwrap();
    let draws: Vec<NetworkScenario> = (0..20)
        .map(|i| {
            NetworkScenario::new(
                layout.clone(),
                cfg.system.k as usize,
                PlacementMode::UniformRandom { seed: 1000 + i },
                cfg.geometry.path_loss_exponent,
                cfg.geometry.min_distance_m,
            )
            .unwrap()
        })
        .collect();
    let moments = pooled_moments(&draws);
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for combiner in Combiner::ALL {
        for n in [2u32, 4, 8] {
            let params = SystemParams { n, ..cfg.params(combiner) };
            let corr = correlation_for_device(n as usize, 100.0, 60.0, SpacingPolicy::MaxSpread, 10_000).unwrap();
            let mean: f64 = draws
                .iter()
                .map(|d| {
                    let v = inv_sinr_fixed(&params, &d.layout, &d.attenuation, &corr).unwrap();
                    se_bound(&params, &v).unwrap().sum_rate
                })
                .sum::<f64>()
                / draws.len() as f64;
            let averaged = se_random_lb(&params, &layout, &moments, &corr, true).unwrap().sum_rate;
            worst = worst.min(mean - averaged);
            pass &= mean >= averaged;
        }
    }
    let grid: Vec<f64> = (0..50).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0)).collect();
    let mut violations = 0;
    for n in [2u32, 4, 8, 16] {
        let rate = |s: f64| sm_rate(n, s, 1.0).unwrap().rate;
        for &a in &grid {
            for &b in &grid {
                let mid = rate(0.5 * (a + b));
                let chord = 0.5 * (rate(a) + rate(b));
                if mid > chord + 1e-12 * chord.abs().max(1.0) {
                    violations += 1;
                }
            }
        }
    }
    pass &= violations == 0;
    outcome(
        pass,
        format!(
            "min(mean per-draw rate - averaged bound) = {worst:.4} bit/s/Hz over 2 combiners x N in {{2,4,8}}; \
             midpoint-convexity violations: {violations} of 10000"
        ),
    )
}

fn first_transition(rows: &[NStar], from: u32, to: u32) -> Option<f64> {
    rows.windows(2)
        .find(|w| w[0].n_star == Some(from) && w[1].n_star == Some(to))
        .map(|w| w[1].axis_value)
}

fn best_n_reproduction(locations: &Locations) -> Outcome {
    let mut cfg = table_one();
    cfg.correlation.device_size_mm = 1000.0;
    let cands = cfg.system.candidate_n.clone();
    let point = cfg.operating_point();
    let nstar = |p| optimize_n(&p, Combiner::Zf, &cands, locations).unwrap().0;
    let k10 = nstar(point);
    let k20 = nstar(smse_core::sweep::OperatingPoint { k: 20, ..point });
    let a = k10 == Some(4) && k20 == Some(2);

    let fig7 = ExperimentConfig::preset("fig7").unwrap();
    let step = fig7.sweep.values[1] - fig7.sweep.values[0];
    let sweep = evaluate_grid(&fig7.sweep_grid().unwrap(), locations).unwrap();
    let transition = first_transition(&sweep.n_star, 2, 4);
    let b = transition.is_some_and(|m| (m - 120.0).abs() <= step);

    let w1 = nstar(smse_core::sweep::OperatingPoint { omega: 1, ..point });
    let c = w1 == Some(16);

    let fig8 = ExperimentConfig::preset("fig8").unwrap();
    let grid = SweepGrid { combiners: vec![Combiner::Zf], ..fig8.sweep_grid().unwrap() };
    let k_sweep = evaluate_grid(&grid, locations).unwrap();
    let mut monotone = true;
    let mut at_50 = Vec::new();
    for omega in [1.0, 3.0] {
        let series: Vec<&NStar> = k_sweep.n_star.iter().filter(|r| r.series_value == Some(omega)).collect();
        monotone &= series.windows(2).all(|w| w[1].n_star <= w[0].n_star);
        at_50.push(series.last().unwrap().n_star);
    }
    let d = monotone && at_50[1] == Some(1);

    outcome(
        a && b && c && d,
        format!(
            "(a) K=10 -> {k10:?}, K=20 -> {k20:?} [{}]; (b) omega=3 2->4 at M={transition:?}, grid step {step} [{}]; \
             (c) omega=1 M=512 -> {w1:?} [{}]; (d) non-increasing in K: {monotone}, K=50 -> {at_50:?} for omega 1/3 [{}]",
            verdict(a),
            verdict(b),
            verdict(c),
            verdict(d)
        ),
    )
}

fn spacing_optimizer() -> Outcome {
    let grid = 10_000;
    let (d, obj) = optimize_spacing(2, 100.0, 60.0, grid).unwrap();
    let target = 2.4048 * 60.0 / std::f64::consts::TAU;
    let step = 100.0 / grid as f64;
    outcome(
        (d - target).abs() <= step && obj < 1e-6,
        format!("d_s = {d:.4} mm vs {target:.4} mm (step {step}), leakage {obj:.2e} (limit 1e-6)"),
    )
}

fn orderings(locations: &Locations) -> Outcome {
    let mut pass = true;
    let mut checked = 0;
    for id in ["fig10", "fig11", "fig12", "fig13", "fig14"] {
        let cfg = ExperimentConfig::preset(id).unwrap();
        let res = evaluate_grid(&cfg.sweep_grid().unwrap(), locations).unwrap();
        for r in &res.n_star {
            if let Some(base) = r.baseline_sum_rate {
                pass &= r.sum_rate >= base;
                checked += 1;
            }
        }
    }
    let fig8 = ExperimentConfig::preset("fig8").unwrap();
    let res = evaluate_grid(&fig8.sweep_grid().unwrap(), locations).unwrap();
    let mut pairs = 0;
    for a in res.n_star.iter().filter(|r| r.series_value == Some(1.0)) {
        let b = res
            .n_star
            .iter()
            .find(|b| b.series_value == Some(3.0) && b.axis_value == a.axis_value && b.combiner == a.combiner)
            .unwrap();
        pass &= a.n_star.unwrap_or(0) >= b.n_star.unwrap_or(0);
        pairs += 1;
    }
    outcome(pass, format!("{checked} optimised-vs-single-antenna points, {pairs} omega pairs on the K grid"))
}

fn numerical_hygiene() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..=600 {
        let s = 10f64.powf(-3.0 + i as f64 / 100.0);
        let a = detection_probability_series(16, s).unwrap();
        let b = detection_probability_integral(16, s).unwrap();
        worst = worst.max((a - b).abs());
    }
    let mut norm_err = 0.0f64;
    for n in 2..=32 {
        norm_err = norm_err.max((detection_normalizer(n).unwrap() - 1.0 / (n - 1) as f64).abs());
    }
    let mut pilot_err = 0.0f64;
    for omega in [1u32, 3, 4] {
        let layout = CellLayout::hexagonal(500.0, omega).unwrap();
        let (k, n) = (5usize, 4usize);
        // Antenna `a` sends the sub-frame pilot in slot `a` and is silent elsewhere.
        let full = |cell: usize, ue: usize, ant: usize| -> Vec<Complex64> {
            let sub = pilot_sequence(&layout, k, cell, ue);
            let mut v = vec![Complex64::new(0.0, 0.0); sub.len() * n];
            v[ant * sub.len()..(ant + 1) * sub.len()].copy_from_slice(&sub);
            v
        };
        let b = omega as usize * n * k;
        for c1 in [0usize, 1, 2, 7, 8] {
            for c2 in [0usize, 1, 2, 7, 8] {
                for (u1, u2) in [(0, 0), (0, 3), (4, 4)] {
                    for (a1, a2) in [(0, 0), (1, 2), (3, 3)] {
                        let x = full(c1, u1, a1);
                        let y = full(c2, u2, a2);
                        assert_eq!(x.len(), b);
                        let ip: Complex64 = x.iter().zip(&y).map(|(p, q)| p.conj() * q).sum();
                        let same = layout.reuse_group(c1) == layout.reuse_group(c2) && u1 == u2 && a1 == a2;
                        let expect = if same { (omega as usize * k) as f64 } else { 0.0 };
                        pilot_err = pilot_err.max((ip - Complex64::new(expect, 0.0)).norm());
                    }
                }
            }
        }
    }
    outcome(
        worst <= 1e-9 && norm_err <= 1e-12 && pilot_err <= 1e-12,
        format!(
            "series vs integral at N=16: {worst:.2e} (limit 1e-9); normaliser N<=32: {norm_err:.2e} (limit 1e-12); \
             pilot inner products: {pilot_err:.2e} (limit 1e-12)"
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "miss"
    }
}

fn main() {
    let cfg = table_one();
    let locations = uniform_locations(&cfg);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("detection probability vs brute force", Box::new(detection_vs_brute_force)),
        ("large-array limits", Box::new(large_array_limits)),
        ("bound tightness, MR", Box::new(|| tightness(Combiner::Mr))),
        ("bound tightness, ZF", Box::new(|| tightness(Combiner::Zf))),
        ("location averaging and convexity", Box::new(jensen_and_convexity)),
        ("best antenna count", Box::new(|| best_n_reproduction(&locations))),
        ("spacing optimiser", Box::new(spacing_optimizer)),
        ("ordering properties", Box::new(|| orderings(&locations))),
        ("numerical hygiene", Box::new(numerical_hygiene)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {} {name}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
