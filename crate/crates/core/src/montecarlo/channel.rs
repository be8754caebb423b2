//! Correlated Rayleigh channels towards BS 0 and their pilot-based
//! estimates.
//!
//! Complex matrices are stored as separate real and imaginary parts; the
//! transmit correlation is real, so it acts on each part independently.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlation::TxCorrelation;
use crate::geometry::NetworkScenario;
use crate::rng::{stream, StreamTag};

/// Channels from the UEs of `cells` to the `bs_antennas` antennas of BS 0.
/// Column `(slot * K + k) * N + n` holds antenna `n` of UE `k` in
/// `cells[slot]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub bs_antennas: usize,
    pub ues_per_cell: usize,
    pub ue_antennas: usize,
    pub cells: Vec<usize>,
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl ChannelRealization {
    pub fn slot(&self, cell: usize) -> Option<usize> {
        self.cells.iter().position(|&c| c == cell)
    }

    pub fn column_index(&self, slot: usize, ue: usize, antenna: usize) -> usize {
        (slot * self.ues_per_cell + ue) * self.ue_antennas + antenna
    }

    pub fn column(&self, cell: usize, ue: usize, antenna: usize) -> DVector<Complex64> {
        let c = self.column_index(self.slot(cell).expect("cell not drawn"), ue, antenna);
        DVector::from_fn(self.bs_antennas, |i, _| Complex64::new(self.re[(i, c)], self.im[(i, c)]))
    }
}

/// Fills `out` with independent CN(0, `variance`) parts: each real part
/// and each imaginary part has variance `variance / 2`.
pub(crate) fn fill_complex_normal<R: Rng + ?Sized>(
    rng: &mut R,
    re: &mut [f64],
    im: &mut [f64],
    variance: f64,
) {
    let scale = (0.5 * variance).sqrt();
    for x in re.iter_mut() {
        *x = scale * rng.sample::<f64, _>(StandardNormal);
    }
    for x in im.iter_mut() {
        *x = scale * rng.sample::<f64, _>(StandardNormal);
    }
}

/// Right-multiplies the `M x N` block starting at column `first` by `root`.
fn correlate_block(mat: &mut DMatrix<f64>, first: usize, root: &DMatrix<f64>, scratch: &mut [f64]) {
    let n = root.nrows();
    if n == 1 {
        return;
    }
    for i in 0..mat.nrows() {
        for (c, s) in scratch.iter_mut().enumerate() {
            *s = (0..n).map(|t| mat[(i, first + t)] * root[(t, c)]).sum();
        }
        for (c, s) in scratch.iter().enumerate() {
            mat[(i, first + c)] = *s;
        }
    }
}

/// One realization `H_jk = sqrt(beta_0jk) H~ R^{1/2}` for every UE of `cells`.
pub(crate) fn draw_realization<R: Rng + ?Sized>(
    rng: &mut R,
    bs_antennas: usize,
    scenario: &NetworkScenario,
    root: &DMatrix<f64>,
    cells: &[usize],
) -> ChannelRealization {
    let k_count = scenario.ues_per_cell();
    let n = root.nrows();
    let cols = cells.len() * k_count * n;
    let mut re = DMatrix::zeros(bs_antennas, cols);
    let mut im = DMatrix::zeros(bs_antennas, cols);
    let mut scratch = vec![0.0; n];
    for (slot, &cell) in cells.iter().enumerate() {
        for k in 0..k_count {
            let first = (slot * k_count + k) * n;
            let beta = scenario.attenuation.beta(0, cell, k);
            let span = first * bs_antennas..(first + n) * bs_antennas;
            fill_complex_normal(
                rng,
                &mut re.as_mut_slice()[span.clone()],
                &mut im.as_mut_slice()[span],
                beta,
            );
            correlate_block(&mut re, first, root, &mut scratch);
            correlate_block(&mut im, first, root, &mut scratch);
        }
    }
    ChannelRealization {
        bs_antennas,
        ues_per_cell: k_count,
        ue_antennas: n,
        cells: cells.to_vec(),
        re,
        im,
    }
}

/// Lazily generated realizations over all cells; draw `i` depends only on
/// `(seed, i)`.
pub fn draw_channels<'a>(
    scenario: &'a NetworkScenario,
    corr: &TxCorrelation,
    bs_antennas: usize,
    count: u64,
    seed: u64,
) -> impl Iterator<Item = ChannelRealization> + 'a {
    let root = corr.sqrt();
    let cells: Vec<usize> = (0..scenario.cell_count()).collect();
    (0..count).map(move |i| {
        let mut rng = stream(seed, StreamTag::Channels, i);
        draw_realization(&mut rng, bs_antennas, scenario, &root, &cells)
    })
}

/// Estimated channels of the cell-0 UEs, column `k * N + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
    /// Neighbour cells whose UEs contaminate the estimate.
    pub contributors: Vec<usize>,
}

impl ChannelEstimate {
    pub fn to_complex(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.re.nrows(), self.re.ncols(), |i, j| {
            Complex64::new(self.re[(i, j)], self.im[(i, j)])
        })
    }
}

/// Despread pilot observation: the own channel, plus the channels of the
/// same-index UEs of every pilot-sharing neighbour scaled by
/// `sqrt(beta_00k / beta_jjk)`, plus CN(0, beta_00k / (omega K snr)) noise.
/// `snr = inf` gives noiseless estimates.
pub fn estimate_channels<R: Rng + ?Sized>(
    realization: &ChannelRealization,
    scenario: &NetworkScenario,
    reuse_factor: u32,
    snr: f64,
    rng: &mut R,
) -> ChannelEstimate {
    let m = realization.bs_antennas;
    let k_count = realization.ues_per_cell;
    let n_count = realization.ue_antennas;
    let contributors = scenario.layout.pilot_sharing();
    let atten = &scenario.attenuation;
    let mut re = DMatrix::zeros(m, k_count * n_count);
    let mut im = DMatrix::zeros(m, k_count * n_count);
    let own = realization.slot(0).expect("cell 0 must be drawn");
    for k in 0..k_count {
        let noise_var = atten.beta(0, 0, k) / (reuse_factor as f64 * k_count as f64 * snr);
        for n in 0..n_count {
            let dst = k * n_count + n;
            let span = dst * m..(dst + 1) * m;
            if noise_var > 0.0 {
                fill_complex_normal(
                    rng,
                    &mut re.as_mut_slice()[span.clone()],
                    &mut im.as_mut_slice()[span],
                    noise_var,
                );
            }
            let mut add = |slot: usize, weight: f64| {
                let src = realization.column_index(slot, k, n);
                re.column_mut(dst).axpy(weight, &realization.re.column(src), 1.0);
                im.column_mut(dst).axpy(weight, &realization.im.column(src), 1.0);
            };
            add(own, 1.0);
            for &j in &contributors {
                let slot = realization.slot(j).expect("pilot-sharing cell must be drawn");
                add(slot, (atten.beta(0, 0, k) / atten.beta(j, j, k)).sqrt());
            }
        }
    }
    ChannelEstimate { re, im, contributors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::jakes_matrix;
    use crate::geometry::{CellLayout, PlacementMode};

    fn scenario(omega: u32, k: usize) -> NetworkScenario {
        let layout = CellLayout::hexagonal(500.0, omega).unwrap();
        NetworkScenario::new(layout, k, PlacementMode::FixedRing { radius: 275.0 }, 3.7, 50.0).unwrap()
    }

    #[test]
    fn draws_are_reproducible() {
        let scen = scenario(3, 2);
        let corr = jakes_matrix(2, 50.0, 60.0).unwrap();
        let a: Vec<_> = draw_channels(&scen, &corr, 16, 3, 11).collect();
        let b: Vec<_> = draw_channels(&scen, &corr, 16, 3, 11).collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn single_antenna_entries_have_beta_variance() {
        let single = NetworkScenario::new(
            CellLayout::single_cell(500.0).unwrap(),
            1,
            PlacementMode::FixedRing { radius: 100.0 },
            3.7,
            50.0,
        )
        .unwrap();
        let corr = jakes_matrix(1, 1.0, 60.0).unwrap();
        let beta = single.attenuation.beta(0, 0, 0);
        let mut power = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        let draws = 20_000;
        for h in draw_channels(&single, &corr, 8, draws, 5) {
            let c = h.column(0, 0, 0);
            power += c.norm_squared() / 8.0;
            cross += c[0] * c[1].conj();
        }
        let power = power / draws as f64;
        assert!((power / beta - 1.0).abs() < 0.02, "{}", power / beta);
        assert!(cross.norm() / draws as f64 / beta < 0.03);
    }

    #[test]
    fn noiseless_uncontaminated_estimate_is_exact() {
        let single = NetworkScenario::new(
            CellLayout::single_cell(500.0).unwrap(),
            3,
            PlacementMode::FixedRing { radius: 200.0 },
            3.7,
            50.0,
        )
        .unwrap();
        let corr = jakes_matrix(2, 30.0, 60.0).unwrap();
        let h = draw_channels(&single, &corr, 12, 1, 1).next().unwrap();
        let mut rng = stream(1, StreamTag::Channels, 99);
        let est = estimate_channels(&h, &single, 1, f64::INFINITY, &mut rng);
        assert!(est.contributors.is_empty());
        assert_eq!(est.re, h.re);
        assert_eq!(est.im, h.im);
    }
}
