//! Parameter sweeps over the closed-form bounds, the search for the
//! best antenna count `N*`, and bound-versus-simulation comparisons.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    db_to_linear, inv_sinr_fixed, se_bound, se_random_lb, sm_rate, Combiner, SystemParams,
};
use crate::correlation::{correlation_for_device, SpacingPolicy, TxCorrelation};
use crate::error::{Error, ErrorKind, Result};
use crate::geometry::{
    spatial_moments, CellLayout, InterferenceMoments, MomentSpec, NetworkScenario, PlacementMode,
};
use crate::montecarlo::{mutual_information, sinr_oracle, OracleOptions};
use crate::rng::{derive_seed, stream, StreamTag};

/// Default candidate antenna counts.
pub const CANDIDATE_N: [u32; 5] = [1, 2, 4, 8, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    M,
    K,
    T,
    /// Device size in mm.
    #[serde(rename = "d_m")]
    DeviceSize,
    Omega,
    N,
    /// Effective SNR in dB.
    #[serde(rename = "snr_db")]
    Snr,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::M => "m",
            Axis::K => "k",
            Axis::T => "t",
            Axis::DeviceSize => "d_m",
            Axis::Omega => "omega",
            Axis::N => "n",
            Axis::Snr => "snr_db",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "m" => Axis::M,
            "k" => Axis::K,
            "t" => Axis::T,
            "d_m" | "dm" | "device_size_mm" => Axis::DeviceSize,
            "omega" | "w" => Axis::Omega,
            "n" => Axis::N,
            "snr" | "snr_db" => Axis::Snr,
            other => {
                return Err(Error::Config(format!(
                    "unknown sweep axis `{other}`; expected one of m, k, t, d_m, omega, n, snr_db"
                )))
            }
        })
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything fixed at one grid point except the antenna count and combiner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub t: u32,
    pub omega: u32,
    pub snr_db: f64,
    pub device_mm: f64,
    pub wavelength_mm: f64,
    pub spacing: SpacingPolicy,
    pub grid_points: usize,
    pub theta: Option<f64>,
    pub include_variance: bool,
}

fn integral(axis: Axis, value: f64) -> Result<u32> {
    if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as u32)
    } else {
        Err(Error::Config(format!("axis {axis} needs positive integers, got {value}")))
    }
}

impl OperatingPoint {
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut p = *self;
        match axis {
            Axis::M => p.m = integral(axis, value)?,
            Axis::K => p.k = integral(axis, value)?,
            Axis::T => p.t = integral(axis, value)?,
            Axis::Omega => p.omega = integral(axis, value)?,
            Axis::N => p.n = integral(axis, value)?,
            Axis::DeviceSize => p.device_mm = value,
            Axis::Snr => p.snr_db = value,
        }
        Ok(p)
    }

    pub fn axis_value(&self, axis: Axis) -> f64 {
        match axis {
            Axis::M => self.m as f64,
            Axis::K => self.k as f64,
            Axis::T => self.t as f64,
            Axis::Omega => self.omega as f64,
            Axis::N => self.n as f64,
            Axis::DeviceSize => self.device_mm,
            Axis::Snr => self.snr_db,
        }
    }

    pub fn params(&self, n: u32, combiner: Combiner) -> SystemParams {
        SystemParams {
            m: self.m,
            n,
            k: self.k,
            t: self.t,
            omega: self.omega,
            snr: db_to_linear(self.snr_db),
            combiner,
            theta: self.theta,
        }
    }

    pub fn correlation(&self, n: u32) -> Result<TxCorrelation> {
        correlation_for_device(n as usize, self.device_mm, self.wavelength_mm, self.spacing, self.grid_points)
    }
}

/// How UE locations enter the bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum Locations {
    /// Uniform UEs: location-averaged bound from precomputed moments.
    Uniform { cell_radius: f64, moments: InterferenceMoments, fingerprint: String },
    /// Every cell's UEs on a ring: fixed-location bound.
    Ring { cell_radius: f64, radius: f64, path_loss_exponent: f64, min_distance: f64 },
}

impl Locations {
    pub fn fingerprint(&self) -> String {
        match self {
            Locations::Uniform { fingerprint, .. } => fingerprint.clone(),
            Locations::Ring { cell_radius, radius, path_loss_exponent, min_distance } => format!(
                "ring|r_c={cell_radius:e}|radius={radius:e}|alpha={path_loss_exponent:e}|r_min={min_distance:e}"
            ),
        }
    }
}

/// Why a grid row has no rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Infeasibility {
    PilotOverhead,
    RankDeficient,
    DegenerateCorrelation,
}

impl Infeasibility {
    pub fn code(self) -> &'static str {
        match self {
            Infeasibility::PilotOverhead => "pilot-overhead",
            Infeasibility::RankDeficient => "rank-deficient",
            Infeasibility::DegenerateCorrelation => "degenerate-correlation",
        }
    }

    fn classify(err: &Error) -> Option<Self> {
        match err {
            Error::PilotOverhead { .. } => Some(Infeasibility::PilotOverhead),
            Error::RankDeficient { .. } => Some(Infeasibility::RankDeficient),
            Error::DegenerateCorrelation { .. } => Some(Infeasibility::DegenerateCorrelation),
            _ => None,
        }
    }
}

/// Rate of one `(point, combiner, N)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u32,
    pub combiner: Combiner,
    pub infeasible: Option<Infeasibility>,
    pub sum_rate: f64,
    pub per_ue_rate: f64,
    /// Effective noise variance fed to the rate formula (mean over UEs).
    pub sigma_sq: f64,
    pub p_correct: f64,
    pub time_fraction: f64,
}

impl RateRow {
    pub fn feasible(&self) -> bool {
        self.infeasible.is_none()
    }

    fn infeasible(n: u32, combiner: Combiner, why: Infeasibility) -> Self {
        RateRow {
            n,
            combiner,
            infeasible: Some(why),
            sum_rate: f64::NAN,
            per_ue_rate: f64::NAN,
            sigma_sq: f64::NAN,
            p_correct: f64::NAN,
            time_fraction: f64::NAN,
        }
    }
}

/// Closed-form rate at one point; structural infeasibility becomes a flagged
/// row, anything else is an error.
pub fn evaluate_rate(point: &OperatingPoint, combiner: Combiner, n: u32, locations: &Locations) -> Result<RateRow> {
    match try_rate(point, combiner, n, locations) {
        Ok(row) => Ok(row),
        Err(e) => match Infeasibility::classify(&e) {
            Some(why) => Ok(RateRow::infeasible(n, combiner, why)),
            None => Err(e),
        },
    }
}

fn try_rate(point: &OperatingPoint, combiner: Combiner, n: u32, locations: &Locations) -> Result<RateRow> {
    let params = point.params(n, combiner);
    params.validate()?;
    let corr = point.correlation(n)?;
    let (se, sigma_sq) = match locations {
        Locations::Uniform { cell_radius, moments, .. } => {
            let layout = CellLayout::hexagonal(*cell_radius, point.omega)?;
            let se = se_random_lb(&params, &layout, moments, &corr, point.include_variance)?;
            let sinr = crate::bounds::inv_sinr_random(&params, &layout, moments, &corr, point.include_variance)?;
            (se, sinr.sigma_sq[0])
        }
        Locations::Ring { cell_radius, radius, path_loss_exponent, min_distance } => {
            let layout = CellLayout::hexagonal(*cell_radius, point.omega)?;
            let scenario = NetworkScenario::new(
                layout,
                point.k as usize,
                PlacementMode::FixedRing { radius: *radius },
                *path_loss_exponent,
                *min_distance,
            )?;
            let sinr = inv_sinr_fixed(&params, &scenario.layout, &scenario.attenuation, &corr)?;
            let se = se_bound(&params, &sinr)?;
            let mean_sigma = sinr.sigma_sq.iter().sum::<f64>() / sinr.sigma_sq.len() as f64;
            (se, mean_sigma)
        }
    };
    let p_correct = se.components.iter().map(|c| c.p_correct).sum::<f64>() / se.components.len() as f64;
    Ok(RateRow {
        n,
        combiner,
        infeasible: None,
        sum_rate: se.sum_rate,
        per_ue_rate: se.sum_rate / point.k as f64,
        sigma_sq,
        p_correct,
        time_fraction: se.time_fraction,
    })
}

/// Best feasible row; ties go to the smaller `N`.
pub fn best_n(rows: &[RateRow]) -> Option<&RateRow> {
    let mut sorted: Vec<&RateRow> = rows.iter().filter(|r| r.feasible()).collect();
    sorted.sort_by_key(|r| r.n);
    sorted.into_iter().fold(None, |best: Option<&RateRow>, r| match best {
        Some(b) if b.sum_rate >= r.sum_rate => Some(b),
        _ => Some(r),
    })
}

/// `N*` and the full per-N table at one point.
pub fn optimize_n(
    point: &OperatingPoint,
    combiner: Combiner,
    candidates: &[u32],
    locations: &Locations,
) -> Result<(Option<u32>, Vec<RateRow>)> {
    check_candidates(candidates)?;
    let rows = candidates
        .iter()
        .map(|&n| evaluate_rate(point, combiner, n, locations))
        .collect::<Result<Vec<_>>>()?;
    Ok((best_n(&rows).map(|r| r.n), rows))
}

fn check_candidates(candidates: &[u32]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::Config("candidate_n is empty".into()));
    }
    if let Some(bad) = candidates.iter().find(|n| !n.is_power_of_two()) {
        return Err(Error::Config(format!("candidate N must be 1 or a power of two, got {bad}")));
    }
    Ok(())
}

/// A one-dimensional sweep, optionally repeated for several values of a
/// second ("series") parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub series: Option<(Axis, Vec<f64>)>,
    pub base: OperatingPoint,
    pub candidate_n: Vec<u32>,
    pub combiners: Vec<Combiner>,
}

impl SweepGrid {
    /// Grid points in output order: series-major, then axis values.
    pub fn points(&self) -> Result<Vec<(Option<f64>, f64, OperatingPoint)>> {
        let series: Vec<Option<f64>> = match &self.series {
            Some((_, values)) => values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for s in series {
            let base = match (s, &self.series) {
                (Some(v), Some((axis, _))) => self.base.with_axis(*axis, v)?,
                _ => self.base,
            };
            for &v in &self.values {
                out.push((s, v, base.with_axis(self.axis, v)?));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: usize,
    pub series_value: Option<f64>,
    pub axis_value: f64,
    pub rate: RateRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NStar {
    pub point: usize,
    pub series_value: Option<f64>,
    pub axis_value: f64,
    pub combiner: Combiner,
    /// `None` when no candidate is feasible.
    pub n_star: Option<u32>,
    pub sum_rate: f64,
    /// Sum rate of the single-antenna baseline, if feasible.
    pub baseline_sum_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: Axis,
    pub series_axis: Option<Axis>,
    pub rows: Vec<SweepRow>,
    pub n_star: Vec<NStar>,
    pub moment_fingerprint: String,
}

/// Evaluates every `(point, combiner, N)` of the grid from the closed forms.
/// Points are independent and evaluated in parallel; output order follows
/// the grid.
pub fn evaluate_grid(grid: &SweepGrid, locations: &Locations) -> Result<SweepResult> {
    check_candidates(&grid.candidate_n)?;
    if grid.combiners.is_empty() {
        return Err(Error::Config("no combiners selected".into()));
    }
    let points = grid.points()?;
    let per_point: Vec<Vec<Vec<RateRow>>> = points
        .par_iter()
        .map(|(_, _, p)| {
            grid.combiners
                .iter()
                .map(|&c| optimize_n(p, c, &grid.candidate_n, locations).map(|(_, rows)| rows))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut n_star = Vec::new();
    for (i, ((series_value, axis_value, _), tables)) in points.iter().zip(per_point).enumerate() {
        for (combiner, table) in grid.combiners.iter().zip(tables) {
            let best = best_n(&table);
            n_star.push(NStar {
                point: i,
                series_value: *series_value,
                axis_value: *axis_value,
                combiner: *combiner,
                n_star: best.map(|r| r.n),
                sum_rate: best.map_or(f64::NAN, |r| r.sum_rate),
                baseline_sum_rate: table.iter().find(|r| r.n == 1 && r.feasible()).map(|r| r.sum_rate),
            });
            rows.extend(table.into_iter().map(|rate| SweepRow {
                point: i,
                series_value: *series_value,
                axis_value: *axis_value,
                rate,
            }));
        }
    }
    Ok(SweepResult {
        axis: grid.axis,
        series_axis: grid.series.as_ref().map(|s| s.0),
        rows,
        n_star,
        moment_fingerprint: locations.fingerprint(),
    })
}

/// Moment sets stored as JSON files named by their fingerprint.
#[derive(Debug, Clone)]
pub struct MomentCache {
    dir: PathBuf,
}

impl MomentCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        MomentCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, fingerprint: &str) -> PathBuf {
        self.dir.join(format!("moments-{fingerprint}.json"))
    }

    /// Returns the cached set or computes and stores it. Concurrent writers
    /// produce identical bytes; the final rename is atomic.
    pub fn load_or_compute(&self, layout: &CellLayout, spec: &MomentSpec) -> Result<InterferenceMoments> {
        let fp = spec.fingerprint(layout);
        let path = self.path_for(&fp);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(m) = serde_json::from_str::<InterferenceMoments>(&text) {
                return Ok(m);
            }
        }
        let moments = spatial_moments(layout, spec)?;
        let io = |e: std::io::Error| Error::Config(format!("moment cache {}: {e}", self.dir.display()));
        std::fs::create_dir_all(&self.dir).map_err(io)?;
        let tmp = self.dir.join(format!(".{fp}.{}.tmp", std::process::id()));
        let text = serde_json::to_string(&moments).expect("moments serialize");
        std::fs::write(&tmp, text).map_err(io)?;
        std::fs::rename(&tmp, &path).map_err(io)?;
        Ok(moments)
    }
}

/// One line of a bound-versus-simulation comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub combiner: Combiner,
    pub m: u32,
    pub n: u32,
    pub k: u32,
    pub bound_sum_rate: f64,
    pub simulated_sum_rate: f64,
    pub simulated_std_error: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    /// `oracle` (channel simulation + mutual information) or
    /// `location-average` (fixed-location bound averaged over placements).
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessOptions {
    pub draws: u64,
    pub mi_samples: u64,
    pub seed: u64,
    pub min_draws: u64,
}

/// Closed-form fixed-location sum rate against the simulated one: SINRs from
/// the channel oracle, rates from the mutual-information estimator.
///
/// The reported standard error combines the mutual-information error with
/// the SINR error pushed through the slope of the rate in `sigma^2`; UEs
/// share channel draws, so their SINR errors are added linearly.
pub fn tightness_report(
    params: &SystemParams,
    scenario: &NetworkScenario,
    corr: &TxCorrelation,
    combiners: &[Combiner],
    opts: &TightnessOptions,
) -> Result<Vec<TightnessRow>> {
    let mut oracle_opts = OracleOptions::new(opts.draws, opts.seed);
    oracle_opts.min_draws = opts.min_draws;
    let estimates = sinr_oracle(params, scenario, corr, combiners, &oracle_opts)?;
    let tf = params.time_fraction()?;
    estimates
        .into_iter()
        .map(|est| {
            let p = SystemParams { combiner: est.combiner, ..*params };
            let closed = inv_sinr_fixed(&p, &scenario.layout, &scenario.attenuation, corr)?;
            let bound = se_bound(&p, &closed)?.sum_rate;
            let mi = mutual_information(&p, &est.profile, opts.mi_samples, derive_seed(opts.seed, 1))?;
            let simulated: f64 = mi.iter().map(|e| e.value).sum();
            let mi_var: f64 = mi.iter().map(|e| e.std_error * e.std_error).sum();
            let sinr_part: f64 = est
                .profile
                .sigma_sq
                .iter()
                .zip(&est.sigma_sq_std_error)
                .map(|(&s, &se)| rate_slope(p.n, s, tf) * se)
                .sum();
            let std_error = (mi_var + sinr_part * sinr_part).sqrt();
            Ok(TightnessRow {
                combiner: est.combiner,
                m: p.m,
                n: p.n,
                k: p.k,
                bound_sum_rate: bound,
                simulated_sum_rate: simulated,
                simulated_std_error: std_error,
                abs_gap: simulated - bound,
                rel_gap: (simulated - bound) / bound,
                method: "oracle".into(),
            })
        })
        .collect()
}

/// `|d rate / d sigma^2|` by central differences.
fn rate_slope(n: u32, sigma_sq: f64, tf: f64) -> f64 {
    let h = 1e-4 * sigma_sq;
    let f = |s: f64| {
        if n == 1 {
            tf * (1.0 / s).ln_1p() / std::f64::consts::LN_2
        } else {
            sm_rate(n, s, tf).map(|c| c.rate).unwrap_or(f64::NAN)
        }
    };
    ((f(sigma_sq + h) - f(sigma_sq - h)) / (2.0 * h)).abs()
}

/// Location-averaged bound against the fixed-location bound averaged over
/// `placements` independent uniform placements (with the same `r_min`).
pub fn tightness_random(
    params: &SystemParams,
    layout: &CellLayout,
    moments: &InterferenceMoments,
    corr: &TxCorrelation,
    path_loss_exponent: f64,
    min_distance: f64,
    placements: u64,
    seed: u64,
    include_variance: bool,
) -> Result<TightnessRow> {
    if placements < 2 {
        return Err(Error::invalid("placements", "need at least 2"));
    }
    let bound = se_random_lb(params, layout, moments, corr, include_variance)?.sum_rate;
    let rates = (0..placements)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, StreamTag::Placement, 1 << 40 | i);
            let placement_seed: u64 = rand::Rng::random(&mut rng);
            let scen = NetworkScenario::new(
                layout.clone(),
                params.k as usize,
                PlacementMode::UniformRandom { seed: placement_seed },
                path_loss_exponent,
                min_distance,
            )?;
            let sinr = inv_sinr_fixed(params, &scen.layout, &scen.attenuation, corr)?;
            Ok(se_bound(params, &sinr)?.sum_rate)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = rates.iter().sum::<f64>() / placements as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (placements - 1) as f64;
    Ok(TightnessRow {
        combiner: params.combiner,
        m: params.m,
        n: params.n,
        k: params.k,
        bound_sum_rate: bound,
        simulated_sum_rate: mean,
        simulated_std_error: (var / placements as f64).sqrt(),
        abs_gap: mean - bound,
        rel_gap: (mean - bound) / bound,
        method: "location-average".into(),
    })
}

/// Exit-code class of an error, re-exported for front ends.
pub fn error_class(err: &Error) -> ErrorKind {
    err.kind()
}
