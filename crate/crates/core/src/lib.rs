//! Uplink spectral-efficiency bounds for multi-cell massive MIMO with
//! spatial modulation at the UEs, plus Monte-Carlo oracles and sweeps.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: 19-cell hexagonal layout, pilot reuse, UE placement,
//!   large-scale gains and their spatial moments.
//! * [`correlation`]: Jakes transmit correlation and spacing search.
//! * [`bounds`]: closed-form SINR bounds, detection probability and SE.
//! * [`montecarlo`]: channel-level simulation used to check the bounds.
//! * [`sweep`]: parameter grids and the search for the best antenna count.
//! * [`config`]: experiment configuration and presets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod correlation;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod numeric;
pub mod rng;
pub mod special;
pub mod sweep;

pub use bounds::{Combiner, SeResult, SinrProfile};
pub use config::ExperimentConfig;
pub use correlation::{SpacingPolicy, TxCorrelation};
pub use error::{Error, ErrorKind, Result};
pub use geometry::{
    AttenuationProfile, CellLayout, InterferenceMoments, NetworkScenario, PlacementMode,
    UePlacement,
};
pub use sweep::{SweepGrid, SweepResult};
