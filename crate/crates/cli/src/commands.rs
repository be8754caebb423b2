//! One function per subcommand; each fills CSV tables in the output dir.

use anyhow::Result;
use smse_core::bounds::{inv_sinr_fixed, se_bound, Combiner};
use smse_core::config::Placement;
use smse_core::correlation::{self, leakage, max_spacing};
use smse_core::geometry::{CellLayout, NetworkScenario};
use smse_core::montecarlo::{sinr_oracle, OracleOptions};
use smse_core::sweep::{
    evaluate_rate, optimize_n as best_antennas, tightness_random, tightness_report, Locations, MomentCache,
    OperatingPoint, RateRow, SweepGrid, SweepResult, TightnessOptions, TightnessRow,
};
use smse_core::{Error, ExperimentConfig, InterferenceMoments};

use crate::output::{fmt_f64, OutputDir, Table};
use crate::MonteCarloArgs;

fn f(x: f64) -> String {
    fmt_f64(x)
}

fn placement_name(cfg: &ExperimentConfig) -> &'static str {
    match cfg.geometry.placement {
        Placement::Uniform => "uniform",
        Placement::Ring => "ring",
    }
}

pub fn apply_monte_carlo(cfg: &mut ExperimentConfig, args: &MonteCarloArgs) -> Result<()> {
    if !args.combiners.is_empty() {
        cfg.system.combiners = args.combiners.clone();
    }
    if let Some(d) = args.draws {
        cfg.montecarlo.draws = d;
    }
    cfg.validate()?;
    Ok(())
}

fn load_moments(cfg: &ExperimentConfig) -> Result<(InterferenceMoments, String)> {
    let layout = CellLayout::hexagonal(cfg.geometry.cell_radius_m, 1)?;
    let spec = cfg.moment_spec();
    let cache = MomentCache::new(&cfg.output.cache_dir);
    Ok((cache.load_or_compute(&layout, &spec)?, spec.fingerprint(&layout)))
}

fn locations(cfg: &ExperimentConfig) -> Result<Locations> {
    let g = &cfg.geometry;
    Ok(match g.placement {
        Placement::Ring => Locations::Ring {
            cell_radius: g.cell_radius_m,
            radius: g.ring_radius_m,
            path_loss_exponent: g.path_loss_exponent,
            min_distance: g.min_distance_m,
        },
        Placement::Uniform => {
            let (moments, fingerprint) = load_moments(cfg)?;
            Locations::Uniform { cell_radius: g.cell_radius_m, moments, fingerprint }
        }
    })
}

fn scenario(cfg: &ExperimentConfig, point: &OperatingPoint) -> Result<NetworkScenario> {
    let g = &cfg.geometry;
    Ok(NetworkScenario::new(
        CellLayout::hexagonal(g.cell_radius_m, point.omega)?,
        point.k as usize,
        cfg.placement_mode(),
        g.path_loss_exponent,
        g.min_distance_m,
    )?)
}

/// Turns an infeasibility flag back into the matching error.
fn require_feasible(point: &OperatingPoint, row: &RateRow) -> Result<()> {
    if row.feasible() {
        return Ok(());
    }
    point.params(row.n, row.combiner).validate()?;
    point.correlation(row.n)?;
    Err(Error::Domain(format!("N = {} is infeasible", row.n)).into())
}

pub fn bounds(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let point = cfg.operating_point();
    let loc = locations(cfg)?;
    let mut t = Table::new(&[
        "combiner", "placement", "m", "n", "k", "t", "omega", "snr_db", "d_m_mm", "eps_s", "sigma_sq",
        "p_correct", "time_fraction", "per_ue_rate", "sum_rate",
    ]);
    for &c in &cfg.system.combiners {
        let row = evaluate_rate(&point, c, point.n, &loc)?;
        require_feasible(&point, &row)?;
        let eps = point.correlation(point.n)?.eps_s;
        t.push(vec![
            c.to_string(),
            placement_name(cfg).into(),
            point.m.to_string(),
            point.n.to_string(),
            point.k.to_string(),
            point.t.to_string(),
            point.omega.to_string(),
            f(point.snr_db),
            f(point.device_mm),
            f(eps),
            f(row.sigma_sq),
            f(row.p_correct),
            f(row.time_fraction),
            f(row.per_ue_rate),
            f(row.sum_rate),
        ]);
        println!("{c}: sum rate {} bit/s/Hz, sigma^2 {}", f(row.sum_rate), f(row.sigma_sq));
    }
    out.table("bounds.csv", &t)
}

fn oracle_options(cfg: &ExperimentConfig) -> OracleOptions {
    let mut o = OracleOptions::new(cfg.montecarlo.draws, cfg.montecarlo.seed);
    o.min_draws = cfg.montecarlo.min_draws;
    o
}

pub fn simulate(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let point = cfg.operating_point();
    let scen = scenario(cfg, &point)?;
    let corr = point.correlation(point.n)?;
    let params = cfg.params(Combiner::Mr);
    let estimates = sinr_oracle(&params, &scen, &corr, &cfg.system.combiners, &oracle_options(cfg))?;
    let mut t = Table::new(&[
        "combiner", "ue", "antenna", "inv_sinr", "std_error", "closed_form_inv_sinr", "draws",
    ]);
    for e in &estimates {
        let p = cfg.params(e.combiner);
        let closed = inv_sinr_fixed(&p, &scen.layout, &scen.attenuation, &corr)?;
        for (k, row) in e.profile.inv_sinr.iter().enumerate() {
            for (n, &v) in row.iter().enumerate() {
                t.push(vec![
                    e.combiner.to_string(),
                    k.to_string(),
                    n.to_string(),
                    f(v),
                    f(e.std_error[k][n]),
                    f(closed.inv_sinr[k][n]),
                    e.draws.to_string(),
                ]);
            }
        }
        let sim = se_bound(&p, &e.profile)?.sum_rate;
        let bound = se_bound(&p, &closed)?.sum_rate;
        println!("{}: rate from simulated SINR {} vs closed form {}", e.combiner, f(sim), f(bound));
    }
    out.table("simulate.csv", &t)
}

fn grid_points(cfg: &ExperimentConfig) -> Result<Vec<(Option<f64>, f64, OperatingPoint)>> {
    match cfg.sweep_grid() {
        Some(g) => Ok(g.points()?),
        None => Ok(vec![(None, f64::NAN, cfg.operating_point())]),
    }
}

pub fn tightness(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let mc = &cfg.montecarlo;
    let opts = TightnessOptions { draws: mc.draws, mi_samples: mc.mi_samples, seed: mc.seed, min_draws: mc.min_draws };
    let series = cfg.sweep.series_axis.map_or("", |a| a.name());
    let axis = cfg.sweep.axis.map_or("", |a| a.name());
    let mut t = Table::new(&[
        "series_axis", "series_value", "axis", "axis_value", "combiner", "m", "n", "k", "bound_sum_rate",
        "simulated_sum_rate", "simulated_std_error", "abs_gap", "rel_gap", "method",
    ]);
    let uniform = cfg.geometry.placement == Placement::Uniform;
    let moments = if uniform { Some(load_moments(cfg)?.0) } else { None };
    for (series_value, axis_value, point) in grid_points(cfg)? {
        let corr = point.correlation(point.n)?;
        let rows: Vec<TightnessRow> = match &moments {
            None => {
                let scen = scenario(cfg, &point)?;
                tightness_report(&point.params(point.n, Combiner::Mr), &scen, &corr, &cfg.system.combiners, &opts)?
            }
            Some(m) => {
                let layout = CellLayout::hexagonal(cfg.geometry.cell_radius_m, point.omega)?;
                cfg.system
                    .combiners
                    .iter()
                    .map(|&c| {
                        tightness_random(
                            &point.params(point.n, c),
                            &layout,
                            m,
                            &corr,
                            cfg.geometry.path_loss_exponent,
                            cfg.geometry.min_distance_m,
                            mc.placements,
                            mc.seed,
                            point.include_variance,
                        )
                    })
                    .collect::<smse_core::Result<_>>()?
            }
        };
        for r in rows {
            println!(
                "{} M={} K={}: bound {} simulated {} ({} se), rel gap {}",
                r.combiner,
                r.m,
                r.k,
                f(r.bound_sum_rate),
                f(r.simulated_sum_rate),
                f(r.simulated_std_error),
                f(r.rel_gap)
            );
            t.push(vec![
                series.into(),
                series_value.map_or(String::new(), f),
                axis.into(),
                f(axis_value),
                r.combiner.to_string(),
                r.m.to_string(),
                r.n.to_string(),
                r.k.to_string(),
                f(r.bound_sum_rate),
                f(r.simulated_sum_rate),
                f(r.simulated_std_error),
                f(r.abs_gap),
                f(r.rel_gap),
                r.method,
            ]);
        }
    }
    out.table("tightness.csv", &t)
}

fn sweep_tables(result: &SweepResult) -> (Table, Table) {
    let series = result.series_axis.map_or("", |a| a.name());
    let axis = result.axis.name();
    let mut rows = Table::new(&[
        "series_axis", "series_value", "axis", "axis_value", "combiner", "n", "feasible", "reason",
        "sum_rate", "per_ue_rate", "sigma_sq", "p_correct", "time_fraction",
    ]);
    for r in &result.rows {
        let rate = &r.rate;
        rows.push(vec![
            series.into(),
            r.series_value.map_or(String::new(), f),
            axis.into(),
            f(r.axis_value),
            rate.combiner.to_string(),
            rate.n.to_string(),
            rate.feasible().to_string(),
            rate.infeasible.map_or("", |i| i.code()).into(),
            f(rate.sum_rate),
            f(rate.per_ue_rate),
            f(rate.sigma_sq),
            f(rate.p_correct),
            f(rate.time_fraction),
        ]);
    }
    let mut best = Table::new(&[
        "series_axis", "series_value", "axis", "axis_value", "combiner", "n_star", "sum_rate",
        "per_ue_rate", "baseline_sum_rate",
    ]);
    for s in &result.n_star {
        let per_ue = result
            .rows
            .iter()
            .find(|r| r.point == s.point && r.rate.combiner == s.combiner && Some(r.rate.n) == s.n_star)
            .map_or(f64::NAN, |r| r.rate.per_ue_rate);
        best.push(vec![
            series.into(),
            s.series_value.map_or(String::new(), f),
            axis.into(),
            f(s.axis_value),
            s.combiner.to_string(),
            s.n_star.map_or(String::new(), |n| n.to_string()),
            f(s.sum_rate),
            f(per_ue),
            s.baseline_sum_rate.map_or(String::new(), f),
        ]);
    }
    (rows, best)
}

fn run_grid(grid: &SweepGrid, loc: &Locations, out: &mut OutputDir, suffix: &str) -> Result<()> {
    let result = smse_core::sweep::evaluate_grid(grid, loc)?;
    let (rows, best) = sweep_tables(&result);
    println!("{}: {} rows, {} optimal-N entries", grid.axis, rows.len(), best.len());
    out.table(&format!("sweep{suffix}.csv"), &rows)?;
    out.table(&format!("n_star{suffix}.csv"), &best)
}

pub fn sweep(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let grid = cfg
        .sweep_grid()
        .ok_or_else(|| Error::Config("no sweep axis; pass --axis and --values or set sweep.axis".into()))?;
    let loc = locations(cfg)?;
    run_grid(&grid, &loc, out, "")?;
    if let Some(paired) = cfg.paired_grid() {
        run_grid(&paired, &loc, out, "_paired")?;
    }
    Ok(())
}

pub fn optimize_n(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let point = cfg.operating_point();
    let loc = locations(cfg)?;
    let mut t = Table::new(&[
        "combiner", "n", "feasible", "reason", "sum_rate", "per_ue_rate", "sigma_sq", "p_correct", "optimal",
    ]);
    for &c in &cfg.system.combiners {
        let (n_star, rows) = best_antennas(&point, c, &cfg.system.candidate_n, &loc)?;
        for r in &rows {
            t.push(vec![
                c.to_string(),
                r.n.to_string(),
                r.feasible().to_string(),
                r.infeasible.map_or("", |i| i.code()).into(),
                f(r.sum_rate),
                f(r.per_ue_rate),
                f(r.sigma_sq),
                f(r.p_correct),
                (Some(r.n) == n_star).to_string(),
            ]);
        }
        match n_star {
            Some(n) => println!("{c}: N* = {n}"),
            None => println!("{c}: no feasible N"),
        }
    }
    out.table("optimize_n.csv", &t)
}

pub fn optimize_spacing(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let c = &cfg.correlation;
    let mut t = Table::new(&[
        "n", "d_m_mm", "wavelength_mm", "max_spacing_mm", "max_spread_eps_s", "optimal_spacing_mm",
        "optimal_eps_s",
    ]);
    for &n in cfg.system.candidate_n.iter().filter(|&&n| n >= 2) {
        let n = n as usize;
        let upper = max_spacing(n, c.device_size_mm)?;
        let (d, eps) = correlation::optimize_spacing(n, c.device_size_mm, c.wavelength_mm, c.grid_points)?;
        t.push(vec![
            n.to_string(),
            f(c.device_size_mm),
            f(c.wavelength_mm),
            f(upper),
            f(leakage(n, upper, c.wavelength_mm)),
            f(d),
            f(eps),
        ]);
        println!("N={n}: spacing {} mm, eps_s {}", f(d), f(eps));
    }
    out.table("spacing.csv", &t)
}

pub fn moments(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<()> {
    let (m, fingerprint) = load_moments(cfg)?;
    let layout = CellLayout::hexagonal(cfg.geometry.cell_radius_m, cfg.system.omega)?;
    let mut t = Table::new(&[
        "cell", "reuse_group", "shares_pilots", "mean", "mean_sq", "variance", "mean_std_error",
        "mean_sq_std_error", "samples",
    ]);
    for j in 0..m.cells() {
        t.push(vec![
            j.to_string(),
            layout.reuse_group(j).to_string(),
            (j != 0 && layout.shares_pilots(j)).to_string(),
            f(m.mean[j]),
            f(m.mean_sq[j]),
            f(m.variance[j]),
            f(m.mean_std_error[j]),
            f(m.mean_sq_std_error[j]),
            m.sample_count.to_string(),
        ]);
    }
    println!("moments {fingerprint}");
    out.table("moments.csv", &t)
}
