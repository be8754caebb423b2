//! Explicit pilot sequences. Each antenna of a UE sends in its own
//! sub-frame of `omega K` symbols, so per sub-frame UE `k` of a cell with
//! reuse label `l` uses column `l K + k` of the `omega K`-point DFT matrix.
//! The oracle never transmits them; they exist to check the orthogonality
//! the estimator relies on.

use num_complex::Complex64;

use crate::geometry::CellLayout;

/// Column `column` of the `len`-point DFT matrix (unnormalised).
pub fn dft_column(len: usize, column: usize) -> Vec<Complex64> {
    (0..len)
        .map(|t| {
            let phase = std::f64::consts::TAU * ((t * column) % len) as f64 / len as f64;
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// Pilot of UE `ue` in `cell` for a layout with `ues_per_cell` UEs.
pub fn pilot_sequence(layout: &CellLayout, ues_per_cell: usize, cell: usize, ue: usize) -> Vec<Complex64> {
    let len = layout.reuse_factor() as usize * ues_per_cell;
    dft_column(len, layout.reuse_group(cell) as usize * ues_per_cell + ue)
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
