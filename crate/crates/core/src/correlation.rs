//! Transmit-side antenna correlation at the UE (Jakes model) and the
//! spacing search that minimises it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::bessel_j0;

/// Smallest eigenvalue accepted before inverting a correlation matrix.
pub const PD_TOLERANCE: f64 = 1e-10;

/// How the inter-antenna spacing is chosen when only the device size is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpacingPolicy {
    /// `d_s = D_m / (N - 1)`: antennas spread over the whole device.
    #[default]
    MaxSpread,
    /// Grid-searched spacing minimising the leakage `eps_s`.
    Optimized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxCorrelation {
    pub antennas: usize,
    pub spacing_mm: f64,
    pub wavelength_mm: f64,
    pub matrix: DMatrix<f64>,
    /// Leakage `sum_{n>=2} R(1, n)^2`.
    pub eps_s: f64,
    /// Diagonal of the inverse correlation matrix.
    pub r_diag: Vec<f64>,
    /// Smallest eigenvalue of the matrix.
    pub min_eigenvalue: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

/// Correlation between two antennas `lag` positions apart.
pub fn jakes_coefficient(lag: usize, spacing_mm: f64, wavelength_mm: f64) -> f64 {
    bessel_j0(std::f64::consts::TAU * spacing_mm * lag as f64 / wavelength_mm)
}

/// Leakage objective `sum_{n=2..N} J0(2 pi d_s (n-1) / lambda)^2`.
pub fn leakage(antennas: usize, spacing_mm: f64, wavelength_mm: f64) -> f64 {
    (1..antennas)
        .map(|lag| jakes_coefficient(lag, spacing_mm, wavelength_mm).powi(2))
        .sum()
}

pub fn jakes_matrix(antennas: usize, spacing_mm: f64, wavelength_mm: f64) -> Result<TxCorrelation> {
    if antennas == 0 {
        return Err(Error::invalid("antennas", "must be at least 1"));
    }
    if !(wavelength_mm > 0.0 && wavelength_mm.is_finite()) {
        return Err(Error::invalid("wavelength_mm", format!("must be positive, got {wavelength_mm}")));
    }
    if antennas > 1 && !(spacing_mm > 0.0 && spacing_mm.is_finite()) {
        return Err(Error::invalid("spacing_mm", format!("must be positive, got {spacing_mm}")));
    }
    let coeffs: Vec<f64> = (0..antennas)
        .map(|lag| if lag == 0 { 1.0 } else { jakes_coefficient(lag, spacing_mm, wavelength_mm) })
        .collect();
    let matrix = DMatrix::from_fn(antennas, antennas, |i, j| coeffs[i.abs_diff(j)]);
    let eigen = SymmetricEigen::new(matrix.clone());
    let min_eigenvalue = eigen.eigenvalues.min();
    if min_eigenvalue <= PD_TOLERANCE {
        return Err(Error::DegenerateCorrelation { spacing_mm, min_eigenvalue });
    }
    let inv_diag = (0..antennas)
        .map(|n| {
            eigen
                .eigenvectors
                .row(n)
                .iter()
                .zip(eigen.eigenvalues.iter())
                .map(|(v, l)| v * v / l)
                .sum()
        })
        .collect();
    Ok(TxCorrelation {
        antennas,
        spacing_mm,
        wavelength_mm,
        eps_s: coeffs[1..].iter().map(|c| c * c).sum(),
        matrix,
        r_diag: inv_diag,
        min_eigenvalue,
        eigenvalues: eigen.eigenvalues,
        eigenvectors: eigen.eigenvectors,
    })
}

/// Correlation for `antennas` elements on a device of size `device_mm`.
pub fn correlation_for_device(
    antennas: usize,
    device_mm: f64,
    wavelength_mm: f64,
    policy: SpacingPolicy,
    grid_points: usize,
) -> Result<TxCorrelation> {
    if antennas == 1 {
        return jakes_matrix(1, device_mm.max(f64::MIN_POSITIVE), wavelength_mm);
    }
    let spacing = match policy {
        SpacingPolicy::MaxSpread => max_spacing(antennas, device_mm)?,
        SpacingPolicy::Optimized => optimize_spacing(antennas, device_mm, wavelength_mm, grid_points)?.0,
    };
    jakes_matrix(antennas, spacing, wavelength_mm)
}

/// `D_m / (N - 1)`.
pub fn max_spacing(antennas: usize, device_mm: f64) -> Result<f64> {
    if antennas < 2 {
        return Err(Error::Domain("antenna spacing is undefined for a single antenna".into()));
    }
    if !(device_mm > 0.0 && device_mm.is_finite()) {
        return Err(Error::invalid("device_size_mm", format!("must be positive, got {device_mm}")));
    }
    Ok(device_mm / (antennas - 1) as f64)
}

/// Leakage differences below this are treated as ties in the spacing search.
/// Near a Bessel zero the grid minimum depends on where grid points happen to
/// fall, so several zeros reach values within ~1e-7 of each other.
pub const SPACING_TIE_TOLERANCE: f64 = 1e-6;

/// Grid search over `D_m / (N - 1) * i / grid_points`, `i = 1..=grid_points`,
/// for the spacing with the smallest leakage. Among spacings whose leakage is
/// within [`SPACING_TIE_TOLERANCE`] of the minimum, the bottom of the first
/// such valley wins,
/// i.e. the most compact array that reaches the optimum. Returns
/// `(spacing, leakage)`.
pub fn optimize_spacing(
    antennas: usize,
    device_mm: f64,
    wavelength_mm: f64,
    grid_points: usize,
) -> Result<(f64, f64)> {
    let upper = max_spacing(antennas, device_mm)?;
    if grid_points == 0 {
        return Err(Error::invalid("grid_points", "must be at least 1"));
    }
    if !(wavelength_mm > 0.0) {
        return Err(Error::invalid("wavelength_mm", "must be positive"));
    }
    let grid: Vec<(f64, f64)> = (1..=grid_points)
        .map(|i| {
            let d = if i == grid_points { upper } else { upper * i as f64 / grid_points as f64 };
            (d, leakage(antennas, d, wavelength_mm))
        })
        .collect();
    let best = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let mut i = grid
        .iter()
        .position(|g| g.1 <= best + SPACING_TIE_TOLERANCE)
        .expect("grid is non-empty");
    // Slide to the bottom of that valley.
    while i + 1 < grid.len() && grid[i + 1].1 < grid[i].1 {
        i += 1;
    }
    Ok(grid[i])
}

impl TxCorrelation {
    /// Symmetric square root `R^{1/2}`; eigenvalues are positive by construction.
    pub fn sqrt(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let root = self.eigenvalues.map(|l| l.max(0.0).sqrt());
        v * DMatrix::from_diagonal(&root) * v.transpose()
    }

    /// `R^{-1}` from the eigendecomposition.
    pub fn inverse(&self) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let inv = self.eigenvalues.map(|l| 1.0 / l);
        v * DMatrix::from_diagonal(&inv) * v.transpose()
    }

    /// Mean of `r_diag`.
    pub fn mean_r(&self) -> f64 {
        self.r_diag.iter().sum::<f64>() / self.antennas as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_antenna() {
        let c = jakes_matrix(1, 10.0, 60.0).unwrap();
        assert_eq!(c.matrix[(0, 0)], 1.0);
        assert_eq!(c.eps_s, 0.0);
        assert!((c.r_diag[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_antennas_half_wavelength() {
        let c = jakes_matrix(2, 30.0, 60.0).unwrap();
        let rho = c.matrix[(0, 1)];
        assert!((rho + 0.304_242_177_644_093_9).abs() < 1e-12);
        assert!((c.eps_s - rho * rho).abs() < 1e-15);
        assert!((c.eps_s - 0.0926).abs() < 1e-4);
        for r in &c.r_diag {
            assert!((r - 1.0 / (1.0 - rho * rho)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_spacing_reports_spacing() {
        match jakes_matrix(4, 1e-6, 60.0) {
            Err(Error::DegenerateCorrelation { spacing_mm, .. }) => assert_eq!(spacing_mm, 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverse_and_sqrt_round_trip() {
        let c = jakes_matrix(8, 100.0 / 7.0, 60.0).unwrap();
        let id = c.inverse() * &c.matrix;
        assert!((id - DMatrix::identity(8, 8)).amax() < 1e-9);
        let s = c.sqrt();
        assert!((&s * &s - &c.matrix).amax() < 1e-12);
        for (n, r) in c.r_diag.iter().enumerate() {
            assert!((r - c.inverse()[(n, n)]).abs() < 1e-9);
            assert!(*r >= 1.0);
        }
    }

    #[test]
    fn spacing_search_interior_and_boundary() {
        let zero = 2.404_825_557_695_773;
        let (d, obj) = optimize_spacing(2, 100.0, 60.0, 10_000).unwrap();
        assert!((d - zero * 60.0 / (2.0 * PI)).abs() < 0.01);
        assert!(obj < 1e-6);
        let (d, _) = optimize_spacing(2, 20.0, 60.0, 10_000).unwrap();
        assert_eq!(d, 20.0);
        assert!(matches!(optimize_spacing(1, 100.0, 60.0, 100), Err(Error::Domain(_))));
    }
}
