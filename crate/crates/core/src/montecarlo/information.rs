//! Mutual information of `y = s e_a + w` with `a` uniform over the `N`
//! antennas, `s ~ CN(0, N)` and `w ~ CN(0, diag(v))`, where `v` holds the
//! SINR reciprocals of one UE.
//!
//! The output is an `N`-component Gaussian mixture, so
//! `I = E[-ln p(y)] - sum_n ln(pi e v_n)` is estimated by sampling `y` and
//! evaluating the mixture density exactly. Per sample, in nats:
//!
//! ```text
//! q = ln N + sum_n |y_n|^2 / v_n - N - logsumexp_m [ ln(v_m / (v_m + N)) + |y_m|^2 N / (v_m (v_m + N)) ]
//! ```

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{chunks, Estimate, Welford};
use crate::bounds::{SinrProfile, SystemParams};
use crate::error::{Error, Result};
use crate::numeric::pairwise_reduce;
use crate::rng::{stream, StreamTag};

const CHUNK: u64 = 4096;

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> (f64, f64) {
    let scale = (0.5 * variance).sqrt();
    (scale * rng.sample::<f64, _>(StandardNormal), scale * rng.sample::<f64, _>(StandardNormal))
}

fn sample_nats<R: Rng + ?Sized>(rng: &mut R, inv_sinr: &[f64], power: &mut [f64], exps: &mut [f64]) -> f64 {
    let n = inv_sinr.len();
    let nf = n as f64;
    let active = rng.random_range(0..n);
    for (t, (&v, p)) in inv_sinr.iter().zip(power.iter_mut()).enumerate() {
        let (mut re, mut im) = complex_normal(rng, v);
        if t == active {
            let (sr, si) = complex_normal(rng, nf);
            re += sr;
            im += si;
        }
        *p = re * re + im * im;
    }
    let mut quad = 0.0;
    for ((&v, &p), e) in inv_sinr.iter().zip(power.iter()).zip(exps.iter_mut()) {
        quad += p / v;
        *e = (v / (v + nf)).ln() + p * nf / (v * (v + nf));
    }
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + exps.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
    nf.ln() + quad - nf - lse
}

/// Mutual information in bits per channel use (not scaled by the frame
/// efficiency) for one UE. `stream_index` separates UEs sharing a seed.
pub fn mutual_information_row(inv_sinr: &[f64], samples: u64, seed: u64, stream_index: u64) -> Result<Estimate> {
    if inv_sinr.is_empty() {
        return Err(Error::invalid("inv_sinr", "needs at least one antenna"));
    }
    if let Some(v) = inv_sinr.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("SINR reciprocal must be positive and finite, got {v}")));
    }
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2"));
    }
    let n = inv_sinr.len();
    let partials: Vec<Welford> = chunks(samples, CHUNK)
        .into_par_iter()
        .map(|(c, _, len)| {
            let mut rng = stream(seed, StreamTag::MutualInformation, (stream_index << 32) | c);
            let mut power = vec![0.0; n];
            let mut exps = vec![0.0; n];
            let mut acc = Welford::default();
            for _ in 0..len {
                acc.push(sample_nats(&mut rng, inv_sinr, &mut power, &mut exps));
            }
            acc
        })
        .collect();
    let nats = pairwise_reduce(partials, Welford::merge).expect("at least one chunk").estimate();
    let ln2 = std::f64::consts::LN_2;
    Ok(Estimate { value: nats.value / ln2, std_error: nats.std_error / ln2, samples })
}

/// Per-UE rate `(T - B)/T * I` with its standard error, for every row of
/// `sinr`.
pub fn mutual_information(
    params: &SystemParams,
    sinr: &SinrProfile,
    samples: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    let tf = params.time_fraction()?;
    sinr.inv_sinr
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let e = mutual_information_row(row, samples, seed, k as u64)?;
            Ok(Estimate { value: tf * e.value, std_error: tf * e.std_error, samples })
        })
        .collect()
}
