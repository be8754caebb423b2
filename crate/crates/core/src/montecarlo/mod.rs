//! Channel-level Monte-Carlo oracles for the closed forms in
//! [`crate::bounds`].
//!
//! * [`channel`]: correlated Rayleigh draws and contaminated estimates.
//! * [`sinr`]: expectation-based SINR estimator driven by MR/ZF combiners.
//! * [`information`]: mutual information of the equivalent diagonal
//!   Gaussian channel carrying one active antenna.
//! * [`detection`]: brute-force max-magnitude antenna detection.
//! * [`pilot`]: explicit DFT pilot sequences.

pub mod channel;
pub mod detection;
pub mod information;
pub mod pilot;
pub mod sinr;

use serde::{Deserialize, Serialize};

pub use channel::{draw_channels, estimate_channels, ChannelEstimate, ChannelRealization};
pub use detection::detection_pc_oracle;
pub use information::{mutual_information, mutual_information_row};
pub use pilot::{dft_column, pilot_sequence};
pub use sinr::{sinr_lemma1, sinr_oracle, CsiMode, OracleOptions, SinrEstimate};

/// A Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Running mean and sum of squared deviations, mergeable in any grouping.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Welford {
    pub n: f64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(self, other: Welford) -> Welford {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }

    pub fn estimate(&self) -> Estimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        Estimate { value: self.mean, std_error: (var / self.n).sqrt(), samples: self.n as u64 }
    }
}

/// Splits `total` items into consecutive chunks of `size`: `(index, start, len)`.
pub(crate) fn chunks(total: u64, size: u64) -> Vec<(u64, u64, u64)> {
    (0..total.div_ceil(size))
        .map(|c| {
            let start = c * size;
            (c, start, size.min(total - start))
        })
        .collect()
}
