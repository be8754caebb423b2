//! Monte-Carlo SINR from the channel expectations of the worst-case
//! uncorrelated-noise bound:
//!
//! ```text
//! SINR_kn = c |E s|^2 / (E I - c |E s|^2 + E ||g||^2),   c = P_0k / N
//! s = g^H h_0kn,   I = sum_{j,k',n'} (P_jk' / N) |g^H h_jk'n'|^2
//! ```
//!
//! with `P_jk = snr / beta_jjk` and unit noise power. Channels of cells that
//! do not reuse cell 0's pilots are independent of every combiner, so their
//! contribution to `I` is integrated exactly: `snr * sum mu_jk' * ||g||^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::channel::{draw_realization, estimate_channels, ChannelEstimate};
use super::chunks;
use crate::bounds::{Combiner, Provenance, SinrProfile, SystemParams};
use crate::correlation::TxCorrelation;
use crate::error::{Error, Result};
use crate::geometry::NetworkScenario;
use crate::numeric::pairwise_reduce;
use crate::rng::{stream, StreamTag};

/// Largest tolerated `max |G^H H^ - I|` for zero forcing.
pub const ZF_RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    /// Combiners built from contaminated, noisy pilot estimates.
    Estimated,
    /// Combiners built from the true channels.
    Perfect,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub draws: u64,
    pub seed: u64,
    pub csi: CsiMode,
    /// Smallest accepted draw count.
    pub min_draws: u64,
    /// Draws per work unit; fixes the reduction tree, not the result's seed.
    pub chunk: u64,
}

impl OracleOptions {
    pub fn new(draws: u64, seed: u64) -> Self {
        OracleOptions { draws, seed, csi: CsiMode::Estimated, min_draws: 1000, chunk: 32 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrEstimate {
    pub combiner: Combiner,
    pub profile: SinrProfile,
    /// Delta-method standard error of each SINR reciprocal.
    pub std_error: Vec<Vec<f64>>,
    /// Standard error of each UE's `sigma^2` (row mean of reciprocals).
    pub sigma_sq_std_error: Vec<f64>,
    pub draws: u64,
}

/// Mean vector and co-moment matrix of the per-draw statistics of one UE:
/// `(Re s, Im s, I, ||g||^2)` for each of its antennas in turn.
#[derive(Debug, Clone, Default)]
struct JointMoments {
    n: f64,
    mean: Vec<f64>,
    co: Vec<f64>,
}

impl JointMoments {
    fn new(dim: usize) -> Self {
        JointMoments { n: 0.0, mean: vec![0.0; dim], co: vec![0.0; dim * dim] }
    }

    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn push(&mut self, x: &[f64]) {
        let dim = self.dim();
        self.n += 1.0;
        let d: Vec<f64> = x.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, di) in self.mean.iter_mut().zip(&d) {
            *m += di / self.n;
        }
        for i in 0..dim {
            for j in 0..dim {
                self.co[i * dim + j] += d[i] * (x[j] - self.mean[j]);
            }
        }
    }

    fn merge(self, other: JointMoments) -> JointMoments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let dim = self.dim();
        let n = self.n + other.n;
        let d: Vec<f64> = other.mean.iter().zip(&self.mean).map(|(b, a)| b - a).collect();
        let mean = self.mean.iter().zip(&d).map(|(a, di)| a + di * other.n / n).collect();
        let w = self.n * other.n / n;
        let co = (0..dim * dim)
            .map(|ij| self.co[ij] + other.co[ij] + d[ij / dim] * d[ij % dim] * w)
            .collect();
        JointMoments { n, mean, co }
    }

    fn covariance(&self, a: usize, b: usize) -> f64 {
        if self.n > 1.0 {
            self.co[a * self.dim() + b] / (self.n - 1.0)
        } else {
            0.0
        }
    }

    /// SINR reciprocal of antenna `t` for signal scale `c`, with its
    /// gradient with respect to that antenna's four means.
    fn inverse_sinr(&self, t: usize, c: f64) -> (f64, [f64; 4]) {
        let (sr, si, i, g) =
            (self.mean[4 * t], self.mean[4 * t + 1], self.mean[4 * t + 2], self.mean[4 * t + 3]);
        let sig = sr * sr + si * si;
        let inv = (i + g) / (c * sig) - 1.0;
        let outer = (i + g) / (c * sig * sig);
        (inv, [-2.0 * sr * outer, -2.0 * si * outer, 1.0 / (c * sig), 1.0 / (c * sig)])
    }

    /// Delta-method variance of `sum_t w_t inv_t` from the means' covariance.
    fn linear_variance(&self, grads: &[(usize, f64, [f64; 4])]) -> f64 {
        let mut var = 0.0;
        for &(ta, wa, ga) in grads {
            for &(tb, wb, gb) in grads {
                for i in 0..4 {
                    for j in 0..4 {
                        var += wa * wb * ga[i] * gb[j] * self.covariance(4 * ta + i, 4 * tb + j);
                    }
                }
            }
        }
        var.max(0.0) / self.n
    }
}

/// Per-draw work shared by every requested combiner.
struct Setup<'a> {
    params: SystemParams,
    scenario: &'a NetworkScenario,
    root: DMatrix<f64>,
    /// Cells simulated explicitly (those reusing cell 0's pilots).
    cells: Vec<usize>,
    /// `P_jk / N` per simulated column.
    weights: Vec<f64>,
    /// `snr * sum_{j not sharing} sum_k mu_jk`.
    analytic: f64,
    combiners: Vec<Combiner>,
    csi: CsiMode,
}

fn combiner_matrix(
    kind: Combiner,
    est: &ChannelEstimate,
    draw: u64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    match kind {
        Combiner::Mr => Ok((est.re.clone(), est.im.clone())),
        Combiner::Zf => {
            let h = est.to_complex();
            let cols = h.ncols();
            let qr = h.clone().qr();
            let r = qr.r();
            let rinv = r
                .solve_upper_triangular(&DMatrix::<Complex64>::identity(cols, cols))
                .ok_or_else(|| Error::Numerical { draw, reason: "singular R factor in ZF".into() })?;
            // H = QR  =>  H (H^H H)^-1 = Q R^-H.
            let g = qr.q() * rinv.adjoint();
            let residual = (g.adjoint() * &h - DMatrix::<Complex64>::identity(cols, cols))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if !(residual < ZF_RESIDUAL_LIMIT) {
                return Err(Error::Numerical {
                    draw,
                    reason: format!("ZF orthogonality residual {residual:e}"),
                });
            }
            Ok((g.map(|z| z.re), g.map(|z| z.im)))
        }
    }
}

impl Setup<'_> {
    fn run_draw(&self, draw: u64, seed: u64, acc: &mut [Vec<JointMoments>]) -> Result<()> {
        let m = self.params.m as usize;
        let k_count = self.params.k as usize;
        let n_count = self.params.n as usize;
        let mut rng = stream(seed, StreamTag::Channels, draw);
        let h = draw_realization(&mut rng, m, self.scenario, &self.root, &self.cells);
        let est = match self.csi {
            CsiMode::Estimated => {
                estimate_channels(&h, self.scenario, self.params.omega, self.params.snr, &mut rng)
            }
            CsiMode::Perfect => {
                let own = 0..k_count * n_count;
                ChannelEstimate {
                    re: h.re.columns_range(own.clone()).into_owned(),
                    im: h.im.columns_range(own).into_owned(),
                    contributors: Vec::new(),
                }
            }
        };
        for (slot, &kind) in self.combiners.iter().enumerate() {
            let (gr, gi) = combiner_matrix(kind, &est, draw)?;
            let grt = gr.transpose();
            let git = gi.transpose();
            // g^H h = (gr^T hr + gi^T hi) + i (gr^T hi - gi^T hr)
            let mut a = &grt * &h.re;
            a.gemm(1.0, &git, &h.im, 1.0);
            let mut b = &grt * &h.im;
            b.gemm(-1.0, &git, &h.re, 1.0);
            let norms: DVector<f64> = DVector::from_fn(k_count * n_count, |i, _| {
                gr.column(i).norm_squared() + gi.column(i).norm_squared()
            });
            let mut stats = vec![0.0; 4 * n_count];
            for k in 0..k_count {
                for n in 0..n_count {
                    let row = k * n_count + n;
                    let own = h.column_index(0, k, n);
                    let mut interference = self.analytic * norms[row];
                    for (c, w) in self.weights.iter().enumerate() {
                        let (x, y) = (a[(row, c)], b[(row, c)]);
                        interference += w * (x * x + y * y);
                    }
                    if !interference.is_finite() || !norms[row].is_finite() {
                        return Err(Error::Numerical { draw, reason: "non-finite combiner output".into() });
                    }
                    stats[4 * n..4 * n + 4]
                        .copy_from_slice(&[a[(row, own)], b[(row, own)], interference, norms[row]]);
                }
                acc[slot][k].push(&stats);
            }
        }
        Ok(())
    }
}

/// Estimates the SINR reciprocals of every cell-0 UE antenna for each
/// combiner in `combiners`, all from the same channel draws.
pub fn sinr_oracle(
    params: &SystemParams,
    scenario: &NetworkScenario,
    corr: &TxCorrelation,
    combiners: &[Combiner],
    opts: &OracleOptions,
) -> Result<Vec<SinrEstimate>> {
    if opts.draws < opts.min_draws.max(2) {
        return Err(Error::invalid(
            "draws",
            format!("need at least {} draws, got {}", opts.min_draws.max(2), opts.draws),
        ));
    }
    for &kind in combiners {
        SystemParams { combiner: kind, ..*params }.validate()?;
    }
    if scenario.ues_per_cell() != params.k as usize || corr.antennas != params.n as usize {
        return Err(Error::invalid("scenario", "K or N differs from the system parameters"));
    }
    if scenario.layout.reuse_factor() != params.omega {
        return Err(Error::invalid("omega", "layout reuse differs from parameters"));
    }
    let layout = &scenario.layout;
    let atten = &scenario.attenuation;
    let cells: Vec<usize> = (0..layout.cell_count()).filter(|&j| layout.shares_pilots(j)).collect();
    let n = params.n as usize;
    let weights = cells
        .iter()
        .flat_map(|&j| {
            (0..params.k as usize).flat_map(move |k| {
                std::iter::repeat_n(params.snr / (n as f64 * atten.beta(j, j, k)), n)
            })
        })
        .collect();
    let analytic = params.snr
        * (0..layout.cell_count())
            .filter(|&j| !layout.shares_pilots(j))
            .map(|j| atten.mu_row(j).iter().sum::<f64>())
            .sum::<f64>();
    let setup = Setup {
        params: *params,
        scenario,
        root: corr.sqrt(),
        cells,
        weights,
        analytic,
        combiners: combiners.to_vec(),
        csi: opts.csi,
    };
    let partials = chunks(opts.draws, opts.chunk.max(1))
        .into_par_iter()
        .map(|(_, start, len)| {
            let mut acc = vec![vec![JointMoments::new(4 * n); params.k as usize]; combiners.len()];
            for d in start..start + len {
                setup.run_draw(d, opts.seed, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    let merged = pairwise_reduce(partials, |a, b| {
        a.into_iter()
            .zip(b)
            .map(|(x, y)| x.into_iter().zip(y).map(|(p, q)| p.merge(q)).collect())
            .collect()
    })
    .expect("at least one chunk");

    merged
        .into_iter()
        .zip(combiners)
        .map(|(acc, &kind)| {
            let mut inv = Vec::with_capacity(params.k as usize);
            let mut se = Vec::with_capacity(params.k as usize);
            let mut sigma_se = Vec::with_capacity(params.k as usize);
            for (k, m) in acc.iter().enumerate() {
                let c = params.snr / (n as f64 * atten.beta(0, 0, k));
                let grads: Vec<(f64, [f64; 4])> = (0..n).map(|t| m.inverse_sinr(t, c)).collect();
                inv.push(grads.iter().map(|g| g.0).collect::<Vec<_>>());
                se.push(
                    (0..n)
                        .map(|t| m.linear_variance(&[(t, 1.0, grads[t].1)]).sqrt())
                        .collect(),
                );
                let mean_grads: Vec<_> =
                    (0..n).map(|t| (t, 1.0 / n as f64, grads[t].1)).collect();
                sigma_se.push(m.linear_variance(&mean_grads).sqrt());
            }
            Ok(SinrEstimate {
                combiner: kind,
                profile: SinrProfile::new(inv, Provenance::MonteCarlo)?,
                std_error: se,
                sigma_sq_std_error: sigma_se,
                draws: opts.draws,
            })
        })
        .collect()
}

/// Single-combiner convenience around [`sinr_oracle`].
pub fn sinr_lemma1(
    params: &SystemParams,
    scenario: &NetworkScenario,
    corr: &TxCorrelation,
    combiner: Combiner,
    draws: u64,
    seed: u64,
) -> Result<SinrEstimate> {
    let opts = OracleOptions::new(draws, seed);
    Ok(sinr_oracle(params, scenario, corr, &[combiner], &opts)?.remove(0))
}
