//! Hexagonal multi-cell layout, pilot-reuse groups, UE placement and
//! large-scale attenuation.
//!
//! Cells are pointy-top hexagons of circumradius `r_c`; neighbouring
//! centres are `sqrt(3) r_c` apart. Cell 0 sits at the origin and is the
//! cell under study. Interference comes only from the modelled cells (no
//! wraparound).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numeric::pairwise_reduce;
use crate::rng::{stream, StreamTag};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Planar position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const ORIGIN: Position = Position { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(self, other: Position) -> Position {
        Position::new(self.x + other.x, self.y + other.y)
    }
}

fn hex_distance((q, r): (i32, i32)) -> i32 {
    q.abs().max(r.abs()).max((q + r).abs())
}

fn axial_center((q, r): (i32, i32), radius: f64) -> Position {
    Position::new(SQRT_3 * radius * (q as f64 + 0.5 * r as f64), 1.5 * radius * r as f64)
}

fn reuse_label((q, r): (i32, i32), reuse_factor: u32) -> u8 {
    match reuse_factor {
        3 => (q + 2 * r).rem_euclid(3) as u8,
        // Offset-coordinate parity: cosets of the index-4 sublattice spanned
        // by axial (2, 0) and (1, 2).
        4 => ((q + r.div_euclid(2)).rem_euclid(2) + 2 * r.rem_euclid(2)) as u8,
        _ => 0,
    }
}

fn check_reuse(reuse_factor: u32) -> Result<()> {
    match reuse_factor {
        1 | 3 | 4 => Ok(()),
        other => Err(Error::UnsupportedReuse(other)),
    }
}

/// Cell centres and pilot-reuse labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    radius: f64,
    reuse_factor: u32,
    axial: Vec<(i32, i32)>,
    centers: Vec<Position>,
    reuse_group: Vec<u8>,
}

impl CellLayout {
    /// The 19-cell layout: cell 0 plus two rings of 6 and 12 neighbours.
    pub fn hexagonal(radius: f64, reuse_factor: u32) -> Result<Self> {
        Self::with_rings(radius, reuse_factor, 2)
    }

    /// One isolated cell; useful for interference-free reference cases.
    pub fn single_cell(radius: f64) -> Result<Self> {
        Self::with_rings(radius, 1, 0)
    }

    fn with_rings(radius: f64, reuse_factor: u32, rings: i32) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid("cell_radius", format!("must be positive, got {radius}")));
        }
        check_reuse(reuse_factor)?;
        let mut axial: Vec<(i32, i32)> = (-rings..=rings)
            .flat_map(|q| (-rings..=rings).map(move |r| (q, r)))
            .filter(|&c| hex_distance(c) <= rings)
            .collect();
        axial.sort_by(|&a, &b| {
            let angle = |c: (i32, i32)| {
                let p = axial_center(c, 1.0);
                p.y.atan2(p.x).rem_euclid(std::f64::consts::TAU)
            };
            hex_distance(a).cmp(&hex_distance(b)).then(angle(a).total_cmp(&angle(b)))
        });
        let centers = axial.iter().map(|&c| axial_center(c, radius)).collect();
        let reuse_group = axial.iter().map(|&c| reuse_label(c, reuse_factor)).collect();
        Ok(CellLayout { radius, reuse_factor, axial, centers, reuse_group })
    }

    /// Same cells, relabelled for another reuse factor.
    pub fn with_reuse(&self, reuse_factor: u32) -> Result<Self> {
        check_reuse(reuse_factor)?;
        let mut out = self.clone();
        out.reuse_factor = reuse_factor;
        out.reuse_group = self.axial.iter().map(|&c| reuse_label(c, reuse_factor)).collect();
        Ok(out)
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn reuse_factor(&self) -> u32 {
        self.reuse_factor
    }

    pub fn cell_count(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Position] {
        &self.centers
    }

    pub fn center(&self, cell: usize) -> Position {
        self.centers[cell]
    }

    pub fn reuse_group(&self, cell: usize) -> u8 {
        self.reuse_group[cell]
    }

    /// Whether two cells share an edge.
    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        let (qa, ra) = self.axial[a];
        let (qb, rb) = self.axial[b];
        hex_distance((qa - qb, ra - rb)) == 1
    }

    /// All cells other than cell 0 (the set Φ).
    pub fn neighbors(&self) -> impl Iterator<Item = usize> {
        1..self.cell_count()
    }

    /// Whether `cell` reuses cell 0's pilots; cell 0 itself counts (Φ'₀).
    pub fn shares_pilots(&self, cell: usize) -> bool {
        self.reuse_group[cell] == self.reuse_group[0]
    }

    /// Neighbours reusing cell 0's pilots (the set Φ').
    pub fn pilot_sharing(&self) -> Vec<usize> {
        self.neighbors().filter(|&j| self.shares_pilots(j)).collect()
    }

    /// Whether `p`, relative to a cell centre, lies inside that cell.
    pub fn hexagon_contains(&self, p: Position) -> bool {
        let half_width = 0.5 * SQRT_3 * self.radius;
        p.x.abs() <= half_width && p.y.abs() <= self.radius - p.x.abs() / SQRT_3
    }
}

/// `build_layout` under its operational name.
pub fn build_layout(cell_radius: f64, reuse_factor: u32) -> Result<CellLayout> {
    CellLayout::hexagonal(cell_radius, reuse_factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum PlacementMode {
    /// K UEs equally spaced in angle on a ring around each cell centre,
    /// UE 0 at angle 0.
    FixedRing { radius: f64 },
    /// K independent uniform draws over each hexagon, rejection-resampled
    /// until at least `r_min` from the serving BS.
    UniformRandom { seed: u64 },
}

/// UE positions in absolute coordinates, `positions[cell][ue]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UePlacement {
    pub mode: PlacementMode,
    pub min_distance: f64,
    pub positions: Vec<Vec<Position>>,
}

impl UePlacement {
    pub fn ues_per_cell(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }
}

/// Uniform point in a pointy-top hexagon around the origin, at least
/// `min_distance` from the centre.
pub fn sample_in_cell<R: Rng + ?Sized>(rng: &mut R, radius: f64, min_distance: f64) -> Position {
    let half_width = 0.5 * SQRT_3 * radius;
    loop {
        let x = rng.random_range(-half_width..half_width);
        let y = rng.random_range(-radius..radius);
        if y.abs() <= radius - x.abs() / SQRT_3 && x.hypot(y) >= min_distance {
            return Position::new(x, y);
        }
    }
}

pub fn place_ues(
    layout: &CellLayout,
    ues_per_cell: usize,
    mode: PlacementMode,
    min_distance: f64,
) -> Result<UePlacement> {
    if ues_per_cell == 0 {
        return Err(Error::Placement("each cell needs at least one UE".into()));
    }
    if !(min_distance > 0.0) {
        return Err(Error::Placement(format!("r_min must be positive, got {min_distance}")));
    }
    let positions = match mode {
        PlacementMode::FixedRing { radius } => {
            if radius <= min_distance || radius >= layout.radius() {
                return Err(Error::Placement(format!(
                    "ring radius {radius} m must lie strictly between r_min = {min_distance} m \
                     and r_c = {} m",
                    layout.radius()
                )));
            }
            let step = std::f64::consts::TAU / ues_per_cell as f64;
            layout
                .centers()
                .iter()
                .map(|&c| {
                    (0..ues_per_cell)
                        .map(|k| {
                            let phi = step * k as f64;
                            c.offset(Position::new(radius * phi.cos(), radius * phi.sin()))
                        })
                        .collect()
                })
                .collect()
        }
        PlacementMode::UniformRandom { seed } => {
            if min_distance >= 0.5 * SQRT_3 * layout.radius() {
                return Err(Error::Placement("r_min leaves no admissible area in the cell".into()));
            }
            layout
                .centers()
                .iter()
                .enumerate()
                .map(|(j, &c)| {
                    let mut rng = stream(seed, StreamTag::Placement, j as u64);
                    (0..ues_per_cell)
                        .map(|_| c.offset(sample_in_cell(&mut rng, layout.radius(), min_distance)))
                        .collect()
                })
                .collect()
        }
    };
    Ok(UePlacement { mode, min_distance, positions })
}

/// `beta(l, j, k) = (d_ljk / r_min)^-alpha` for every BS–UE pair plus the
/// interference ratios `mu(j, k) = beta(0, j, k) / beta(j, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationProfile {
    cells: usize,
    ues_per_cell: usize,
    path_loss_exponent: f64,
    beta: Vec<f64>,
    mu: Vec<Vec<f64>>,
}

impl AttenuationProfile {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn ues_per_cell(&self) -> usize {
        self.ues_per_cell
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    /// Gain between BS `bs` and UE `ue` of cell `cell`.
    pub fn beta(&self, bs: usize, cell: usize, ue: usize) -> f64 {
        self.beta[(bs * self.cells + cell) * self.ues_per_cell + ue]
    }

    pub fn mu(&self, cell: usize, ue: usize) -> f64 {
        self.mu[cell][ue]
    }

    pub fn mu_row(&self, cell: usize) -> &[f64] {
        &self.mu[cell]
    }
}

/// Large-scale gain `(d / r_min)^-alpha`.
pub fn path_gain(distance: f64, min_distance: f64, path_loss_exponent: f64) -> f64 {
    (distance / min_distance).powf(-path_loss_exponent)
}

pub fn attenuation(
    layout: &CellLayout,
    placement: &UePlacement,
    path_loss_exponent: f64,
    min_distance: f64,
) -> Result<AttenuationProfile> {
    if !(path_loss_exponent > 2.0) {
        return Err(Error::invalid(
            "path_loss_exponent",
            format!("must exceed 2 for finite interference moments, got {path_loss_exponent}"),
        ));
    }
    let cells = layout.cell_count();
    if placement.positions.len() != cells {
        return Err(Error::Placement("placement does not match the layout".into()));
    }
    let ues = placement.ues_per_cell();
    let mut beta = vec![0.0; cells * cells * ues];
    for bs in 0..cells {
        let at = layout.center(bs);
        for (cell, row) in placement.positions.iter().enumerate() {
            for (ue, &p) in row.iter().enumerate() {
                let d = p.distance(at);
                if bs == cell && d < min_distance * (1.0 - 1e-12) {
                    return Err(Error::Placement(format!(
                        "UE {ue} of cell {cell} is {d} m from its BS, closer than r_min"
                    )));
                }
                if d <= 0.0 {
                    return Err(Error::Placement(format!("UE {ue} of cell {cell} sits on BS {bs}")));
                }
                beta[(bs * cells + cell) * ues + ue] = path_gain(d, min_distance, path_loss_exponent);
            }
        }
    }
    let mu = (0..cells)
        .map(|j| {
            (0..ues)
                .map(|k| beta[j * ues + k] / beta[(j * cells + j) * ues + k])
                .collect()
        })
        .collect();
    Ok(AttenuationProfile { cells, ues_per_cell: ues, path_loss_exponent, beta, mu })
}

/// Everything the closed forms and the channel oracle need about the
/// network: layout, UE positions and all large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario {
    pub layout: CellLayout,
    pub placement: UePlacement,
    pub attenuation: AttenuationProfile,
}

impl NetworkScenario {
    pub fn new(
        layout: CellLayout,
        ues_per_cell: usize,
        mode: PlacementMode,
        path_loss_exponent: f64,
        min_distance: f64,
    ) -> Result<Self> {
        let placement = place_ues(&layout, ues_per_cell, mode, min_distance)?;
        let attenuation = attenuation(&layout, &placement, path_loss_exponent, min_distance)?;
        Ok(NetworkScenario { layout, placement, attenuation })
    }

    pub fn ues_per_cell(&self) -> usize {
        self.attenuation.ues_per_cell()
    }

    pub fn cell_count(&self) -> usize {
        self.layout.cell_count()
    }
}

/// Parameters of the UE distribution whose interference moments are wanted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSpec {
    pub path_loss_exponent: f64,
    pub min_distance: f64,
    pub sample_count: u64,
    pub seed: u64,
}

impl MomentSpec {
    /// Content hash of everything the moments depend on. Independent of the
    /// reuse factor: relabelling cells does not move UEs.
    pub fn fingerprint(&self, layout: &CellLayout) -> String {
        let text = format!(
            "moments-v1|cells={}|r_c={:e}|alpha={:e}|r_min={:e}|dist=uniform-hex|n={}|seed={}",
            layout.cell_count(),
            layout.radius(),
            self.path_loss_exponent,
            self.min_distance,
            self.sample_count,
            self.seed
        );
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Spatial moments of `mu_jk` under the UE distribution, per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMoments {
    /// First moment E{mu_j}.
    pub mean: Vec<f64>,
    /// Second moment E{mu_j^2}.
    pub mean_sq: Vec<f64>,
    pub variance: Vec<f64>,
    pub mean_std_error: Vec<f64>,
    pub mean_sq_std_error: Vec<f64>,
    pub sample_count: u64,
}

impl InterferenceMoments {
    pub fn cells(&self) -> usize {
        self.mean.len()
    }

    /// Population moments of the K UEs actually placed in each cell.
    /// With every UE of a cell at one point this is a point mass.
    pub fn from_profile(profile: &AttenuationProfile) -> Self {
        let k = profile.ues_per_cell() as f64;
        let mut out = InterferenceMoments {
            mean: Vec::new(),
            mean_sq: Vec::new(),
            variance: Vec::new(),
            mean_std_error: vec![0.0; profile.cells()],
            mean_sq_std_error: vec![0.0; profile.cells()],
            sample_count: profile.ues_per_cell() as u64,
        };
        for j in 0..profile.cells() {
            let row = profile.mu_row(j);
            let m1 = row.iter().sum::<f64>() / k;
            let m2 = row.iter().map(|m| m * m).sum::<f64>() / k;
            let var = row.iter().map(|m| (m - m1).powi(2)).sum::<f64>() / k;
            out.mean.push(m1);
            out.mean_sq.push(m2);
            out.variance.push(var);
        }
        out
    }
}

/// Streaming mean / sum of squared deviations, mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Running) -> Running {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Running {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    fn variance(&self) -> f64 {
        if self.n > 1.0 {
            self.m2 / (self.n - 1.0)
        } else {
            0.0
        }
    }
}

const MOMENT_SHARD: u64 = 4096;

/// Monte-Carlo moments of `mu_jk = (d_jjk / d_0jk)^alpha` for UEs uniform
/// over each neighbour cell. Shards use independent streams and are merged
/// in shard order, so the result does not depend on the worker count.
pub fn spatial_moments(layout: &CellLayout, spec: &MomentSpec) -> Result<InterferenceMoments> {
    if spec.sample_count == 0 {
        return Err(Error::invalid("sample_count", "must be at least 1"));
    }
    if !(spec.path_loss_exponent > 2.0) {
        return Err(Error::invalid("path_loss_exponent", "must exceed 2"));
    }
    let cells = layout.cell_count();
    let shards = spec.sample_count.div_ceil(MOMENT_SHARD);
    let partials: Vec<Vec<(Running, Running)>> = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(spec.seed, StreamTag::Moments, s);
            let count = MOMENT_SHARD.min(spec.sample_count - s * MOMENT_SHARD);
            let mut acc = vec![(Running::default(), Running::default()); cells];
            for _ in 0..count {
                for (j, slot) in acc.iter_mut().enumerate().skip(1) {
                    let rel = sample_in_cell(&mut rng, layout.radius(), spec.min_distance);
                    let to_bs0 = layout.center(j).offset(rel).norm();
                    let mu = (rel.norm() / to_bs0).powf(spec.path_loss_exponent);
                    slot.0.push(mu);
                    slot.1.push(mu * mu);
                }
            }
            acc
        })
        .collect();
    let merged = pairwise_reduce(partials, |a, b| {
        a.into_iter().zip(b).map(|(x, y)| (x.0.merge(y.0), x.1.merge(y.1))).collect()
    })
    .expect("at least one shard");

    let n = spec.sample_count as f64;
    let mut out = InterferenceMoments {
        mean: vec![1.0; cells],
        mean_sq: vec![1.0; cells],
        variance: vec![0.0; cells],
        mean_std_error: vec![0.0; cells],
        mean_sq_std_error: vec![0.0; cells],
        sample_count: spec.sample_count,
    };
    for (j, (first, second)) in merged.into_iter().enumerate().skip(1) {
        let var = first.variance();
        out.mean[j] = first.mean;
        out.mean_sq[j] = second.mean;
        out.variance[j] = var;
        out.mean_std_error[j] = (var / n).sqrt();
        out.mean_sq_std_error[j] = (second.variance() / n).sqrt();
    }
    Ok(out)
}
