//! Brute-force check of the antenna-detection probability: the receiver
//! sees `y = s e_a + w` and picks the branch with the largest power.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{chunks, Estimate};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamTag};

const CHUNK: u64 = 16_384;

/// Empirical frequency of correct detection with its binomial standard
/// error. `s ~ CN(0, N)`, `w_t ~ CN(0, sigma_sq)`, `a` uniform.
pub fn detection_pc_oracle(antennas: u32, sigma_sq: f64, trials: u64, seed: u64) -> Result<Estimate> {
    if antennas < 2 {
        return Err(Error::Domain("detection needs at least two antennas".into()));
    }
    if !(sigma_sq >= 0.0 && sigma_sq.is_finite()) {
        return Err(Error::Domain(format!("noise variance must be finite and nonnegative, got {sigma_sq}")));
    }
    if trials == 0 {
        return Err(Error::invalid("trials", "need at least one"));
    }
    let n = antennas as usize;
    let noise = (0.5 * sigma_sq).sqrt();
    let signal = (0.5 * antennas as f64).sqrt();
    let hits: u64 = chunks(trials, CHUNK)
        .into_par_iter()
        .map(|(c, _, len)| {
            let mut rng = stream(seed, StreamTag::Detection, c);
            let mut hits = 0u64;
            for _ in 0..len {
                let active = rng.random_range(0..n);
                let mut best = (0usize, f64::NEG_INFINITY);
                for t in 0..n {
                    let mut re = noise * rng.sample::<f64, _>(StandardNormal);
                    let mut im = noise * rng.sample::<f64, _>(StandardNormal);
                    if t == active {
                        re += signal * rng.sample::<f64, _>(StandardNormal);
                        im += signal * rng.sample::<f64, _>(StandardNormal);
                    }
                    let p = re * re + im * im;
                    if p > best.1 {
                        best = (t, p);
                    }
                }
                hits += u64::from(best.0 == active);
            }
            hits
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Ok(Estimate { value: p, std_error: (p * (1.0 - p) / trials as f64).sqrt(), samples: trials })
}
