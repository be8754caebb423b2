//! Shared fixtures for the benchmarks.

use smse_core::correlation::{correlation_for_device, SpacingPolicy};
use smse_core::geometry::{CellLayout, NetworkScenario, PlacementMode};
use smse_core::{ExperimentConfig, TxCorrelation};

/// Reference operating point with every cell's UEs on the 275 m ring.
pub fn ring_scenario(omega: u32, k: usize) -> NetworkScenario {
    let cfg = ExperimentConfig::default();
    let g = &cfg.geometry;
    let layout = CellLayout::hexagonal(g.cell_radius_m, omega).expect("valid layout");
    NetworkScenario::new(layout, k, PlacementMode::FixedRing { radius: g.ring_radius_m }, g.path_loss_exponent, g.min_distance_m)
        .expect("valid placement")
}

pub fn correlation(n: usize) -> TxCorrelation {
    correlation_for_device(n, 100.0, 60.0, SpacingPolicy::MaxSpread, 10_000).expect("well-conditioned")
}
