//! Closed-form SINR reciprocals, antenna-detection probability and the
//! spectral-efficiency lower bounds built from them.
//!
//! Powers enter only through `snr = P_u / sigma_N^2` (linear).

use serde::{Deserialize, Serialize};

use crate::correlation::TxCorrelation;
use crate::error::{Error, Result};
use crate::geometry::{AttenuationProfile, CellLayout, InterferenceMoments};
use crate::numeric::{binomial, integrate, DoubleDouble};

/// Largest antenna count evaluated with the alternating binomial series;
/// above it the integral representation is used.
pub const SERIES_MAX_ANTENNAS: u32 = 16;

/// Inter-user leakage factor of the ZF approximation: 0.2 with full reuse,
/// 0.01 otherwise.
pub fn default_theta(reuse_factor: u32) -> f64 {
    if reuse_factor == 1 {
        0.2
    } else {
        0.01
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combiner {
    /// Maximum-ratio combining.
    Mr,
    /// Zero-forcing combining.
    Zf,
}

impl Combiner {
    pub const ALL: [Combiner; 2] = [Combiner::Mr, Combiner::Zf];

    pub fn name(self) -> &'static str {
        match self {
            Combiner::Mr => "mr",
            Combiner::Zf => "zf",
        }
    }
}

impl std::fmt::Display for Combiner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Combiner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr" | "mrc" => Ok(Combiner::Mr),
            "zf" => Ok(Combiner::Zf),
            other => Err(Error::Config(format!("unknown combiner `{other}`; expected mr or zf"))),
        }
    }
}

/// Link-level parameters shared by every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// BS antennas.
    pub m: u32,
    /// Transmit antennas per UE.
    pub n: u32,
    /// UEs per cell.
    pub k: u32,
    /// Symbols per coherence frame.
    pub t: u32,
    /// Pilot reuse factor.
    pub omega: u32,
    /// `P_u / sigma_N^2`, linear.
    pub snr: f64,
    pub combiner: Combiner,
    /// Overrides the default ZF leakage factor.
    pub theta: Option<f64>,
}

impl SystemParams {
    /// Pilot length `B = omega N K`.
    pub fn pilot_len(&self) -> u32 {
        self.omega * self.n * self.k
    }

    /// Fraction of the frame left for data, `(T - B) / T`.
    pub fn time_fraction(&self) -> Result<f64> {
        let b = self.pilot_len();
        if b >= self.t {
            return Err(Error::PilotOverhead { pilot_len: b, frame_len: self.t });
        }
        Ok((self.t - b) as f64 / self.t as f64)
    }

    pub fn theta(&self) -> f64 {
        self.theta.unwrap_or_else(|| default_theta(self.omega))
    }

    /// Checks every structural constraint; infeasibility is reported as
    /// [`Error::PilotOverhead`] or [`Error::RankDeficient`].
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.k == 0 || self.t == 0 {
            return Err(Error::invalid("system", "M, K and T must be positive"));
        }
        if !self.n.is_power_of_two() {
            return Err(Error::invalid("n", format!("must be 1 or a power of two, got {}", self.n)));
        }
        if !matches!(self.omega, 1 | 3 | 4) {
            return Err(Error::UnsupportedReuse(self.omega));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(Error::invalid("snr", format!("must be positive and finite, got {}", self.snr)));
        }
        if let Some(theta) = self.theta {
            if !(theta >= 0.0 && theta.is_finite()) {
                return Err(Error::invalid("theta", format!("must be nonnegative, got {theta}")));
            }
        }
        self.time_fraction()?;
        if self.combiner == Combiner::Zf && self.m <= self.n * self.k {
            return Err(Error::RankDeficient { m: self.m, streams: self.n * self.k });
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedFormFixed,
    ClosedFormRandom,
    MonteCarlo,
}

/// Per-UE, per-antenna SINR reciprocals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrProfile {
    /// `inv_sinr[k][n]`.
    pub inv_sinr: Vec<Vec<f64>>,
    /// Effective noise variance per UE: mean of its row.
    pub sigma_sq: Vec<f64>,
    pub provenance: Provenance,
}

impl SinrProfile {
    pub fn new(inv_sinr: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        if inv_sinr.is_empty() || inv_sinr.iter().any(Vec::is_empty) {
            return Err(Error::invalid("inv_sinr", "needs at least one UE and one antenna"));
        }
        if let Some(bad) = inv_sinr.iter().flatten().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("SINR reciprocal must be positive and finite, got {bad}")));
        }
        let sigma_sq = inv_sinr.iter().map(|row| row.iter().sum::<f64>() / row.len() as f64).collect();
        Ok(SinrProfile { inv_sinr, sigma_sq, provenance })
    }

    pub fn ues(&self) -> usize {
        self.inv_sinr.len()
    }

    pub fn antennas(&self) -> usize {
        self.inv_sinr[0].len()
    }
}

/// Breakdown of one UE's rate, before the time fraction is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateComponents {
    /// `log2(1 + N / sigma^2)`.
    pub shannon_term: f64,
    /// `log2 N`.
    pub index_term: f64,
    /// `P_c log2 P_c + (1 - P_c) log2((1 - P_c) / (N - 1))`, in `[-log2 N, 0]`.
    pub detection_penalty: f64,
    pub p_correct: f64,
    /// Final per-UE rate in bits/s/Hz.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeResult {
    pub rate: Vec<f64>,
    pub sum_rate: f64,
    pub components: Vec<RateComponents>,
    pub time_fraction: f64,
}

impl SeResult {
    fn from_components(components: Vec<RateComponents>, time_fraction: f64, ues: u32) -> Self {
        let rate: Vec<f64> = components.iter().map(|c| c.rate).collect();
        // One row per UE, or one shared row standing for all K UEs.
        let sum_rate = if rate.len() == ues as usize {
            rate.iter().sum()
        } else {
            rate[0] * ues as f64
        };
        SeResult { rate, sum_rate, components, time_fraction }
    }
}

fn check_detection_args(antennas: u32, sigma_sq: f64) -> Result<()> {
    if antennas < 2 {
        return Err(Error::Domain(
            "detection probability needs N >= 2; single-antenna UEs use the Shannon baseline".into(),
        ));
    }
    if !(sigma_sq > 0.0) || sigma_sq.is_nan() {
        return Err(Error::Domain(format!("noise variance must be positive, got {sigma_sq}")));
    }
    Ok(())
}

fn shift(antennas: u32, sigma_sq: f64) -> f64 {
    if sigma_sq.is_infinite() {
        2.0
    } else {
        let n = antennas as f64;
        (n + 2.0 * sigma_sq) / (n + sigma_sq)
    }
}

/// Probability that the active transmit antenna is detected correctly
/// when each of `N` branches sees noise of variance `sigma_sq`.
pub fn detection_probability(antennas: u32, sigma_sq: f64) -> Result<f64> {
    if antennas <= SERIES_MAX_ANTENNAS {
        detection_probability_series(antennas, sigma_sq)
    } else {
        detection_probability_integral(antennas, sigma_sq)
    }
}

/// Double-double sum `sum_r C(N-2, r) (-1)^r / (r + c)`.
fn alternating_series(antennas: u32, c: f64) -> DoubleDouble {
    let top = antennas - 2;
    (0..=top)
        .map(|r| {
            let den = DoubleDouble::from_f64(r as f64).add(DoubleDouble::from_f64(c));
            let term = DoubleDouble::from_f64(binomial(top, r) as f64).div(den);
            if r % 2 == 0 {
                term
            } else {
                term.neg()
            }
        })
        .fold(DoubleDouble::ZERO, DoubleDouble::add)
}

/// Ratio of alternating binomial sums, accumulated in double-double so
/// cancellation up to N = 16 costs no visible precision.
pub fn detection_probability_series(antennas: u32, sigma_sq: f64) -> Result<f64> {
    check_detection_args(antennas, sigma_sq)?;
    if antennas > 60 {
        return Err(Error::Domain(format!("series form limited to N <= 60, got {antennas}")));
    }
    let num = alternating_series(antennas, shift(antennas, sigma_sq));
    let den = alternating_series(antennas, 1.0);
    Ok(num.div(den).to_f64())
}

/// `sum_r C(N-2, r) (-1)^r / (r + 1)`; equals `1 / (N - 1)`.
pub fn detection_normalizer(antennas: u32) -> Result<f64> {
    check_detection_args(antennas, 1.0)?;
    Ok(alternating_series(antennas, 1.0).to_f64())
}

/// `(N - 1) int_0^inf (1 - e^-t)^(N-2) e^(-c t) dt` by adaptive quadrature.
pub fn detection_probability_integral(antennas: u32, sigma_sq: f64) -> Result<f64> {
    check_detection_args(antennas, sigma_sq)?;
    let c = shift(antennas, sigma_sq);
    let power = (antennas - 2) as i32;
    let f = |t: f64| (-(-t).exp_m1()).powi(power) * (-c * t).exp();
    // Integrand is below e^-t; the tail past 60 is under 1e-26.
    let breaks = [0.0, 2.0, 8.0, 20.0, 60.0];
    let total: f64 = breaks
        .windows(2)
        .map(|w| integrate(f, w[0], w[1], 1e-16).0)
        .sum();
    Ok((antennas - 1) as f64 * total)
}

fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Rate of one UE with `N >= 2` antennas and effective noise `sigma_sq`.
pub fn sm_rate(antennas: u32, sigma_sq: f64, time_fraction: f64) -> Result<RateComponents> {
    let p = detection_probability(antennas, sigma_sq)?;
    let n = antennas as f64;
    let shannon_term = (n / sigma_sq).ln_1p() / std::f64::consts::LN_2;
    let index_term = n.log2();
    let miss = 1.0 - p;
    let detection_penalty = xlog2x(p) + if miss > 0.0 { miss * (miss / (n - 1.0)).log2() } else { 0.0 };
    let rate = time_fraction * (shannon_term + index_term + detection_penalty);
    Ok(RateComponents { shannon_term, index_term, detection_penalty, p_correct: p, rate })
}

/// Single-antenna Shannon rate with SINR reciprocal `inv_sinr`.
pub fn siso_rate(inv_sinr: f64, time_fraction: f64) -> RateComponents {
    let shannon_term = (1.0 / inv_sinr).ln_1p() / std::f64::consts::LN_2;
    RateComponents {
        shannon_term,
        index_term: 0.0,
        detection_penalty: 0.0,
        p_correct: 1.0,
        rate: time_fraction * shannon_term,
    }
}

fn check_profile(params: &SystemParams, sinr: &SinrProfile) -> Result<()> {
    if sinr.antennas() != params.n as usize {
        return Err(Error::invalid(
            "sinr",
            format!("profile has {} antennas, parameters say N = {}", sinr.antennas(), params.n),
        ));
    }
    if sinr.ues() != params.k as usize && sinr.ues() != 1 {
        return Err(Error::invalid(
            "sinr",
            format!("profile has {} UEs, parameters say K = {}", sinr.ues(), params.k),
        ));
    }
    Ok(())
}

/// Per-UE SE bound for spatial-modulation UEs (`N >= 2`).
pub fn se_lower_bound_fixed(params: &SystemParams, sinr: &SinrProfile) -> Result<SeResult> {
    if params.n < 2 {
        return Err(Error::Domain("N = 1 has no antenna index; use se_single_antenna".into()));
    }
    check_profile(params, sinr)?;
    let tf = params.time_fraction()?;
    let components = sinr
        .sigma_sq
        .iter()
        .map(|&s| sm_rate(params.n, s, tf))
        .collect::<Result<Vec<_>>>()?;
    Ok(SeResult::from_components(components, tf, params.k))
}

/// Single-antenna baseline, `(T - B)/T log2(1 + 1/chi^2)`.
pub fn se_single_antenna(params: &SystemParams, sinr: &SinrProfile) -> Result<SeResult> {
    if params.n != 1 {
        return Err(Error::Domain(format!(
            "single-antenna rate needs N = 1, got N = {}; use se_lower_bound_fixed",
            params.n
        )));
    }
    check_profile(params, sinr)?;
    let tf = params.time_fraction()?;
    let components = sinr.sigma_sq.iter().map(|&s| siso_rate(s, tf)).collect();
    Ok(SeResult::from_components(components, tf, params.k))
}

/// Dispatches to the SM bound or the single-antenna baseline.
pub fn se_bound(params: &SystemParams, sinr: &SinrProfile) -> Result<SeResult> {
    if params.n == 1 {
        se_single_antenna(params, sinr)
    } else {
        se_lower_bound_fixed(params, sinr)
    }
}

fn check_fixed_inputs(
    params: &SystemParams,
    layout: &CellLayout,
    atten: &AttenuationProfile,
    corr: &TxCorrelation,
) -> Result<()> {
    params.validate()?;
    if layout.reuse_factor() != params.omega {
        return Err(Error::invalid(
            "omega",
            format!("layout uses reuse {}, parameters say {}", layout.reuse_factor(), params.omega),
        ));
    }
    if atten.cells() != layout.cell_count() || atten.ues_per_cell() != params.k as usize {
        return Err(Error::invalid("attenuation", "profile does not match layout and K"));
    }
    if corr.antennas != params.n as usize {
        return Err(Error::invalid("correlation", "matrix size differs from N"));
    }
    Ok(())
}

/// Interference sums entering the fixed-location closed forms for UE `k`.
struct FixedSums {
    /// `sum_{j in Phi'} mu_jk^2`.
    contaminating_sq: f64,
    /// `sum_{j in Phi'_0} mu_jk`.
    sharing: f64,
    /// `sum_{j in Phi'_0} sum_{k' != k} mu_jk'`.
    sharing_others: f64,
    /// `sum_{j not in Phi'_0} sum_k' mu_jk'`.
    non_sharing: f64,
    /// `sum_{j in Phi_0} sum_k' mu_jk'`.
    all: f64,
}

fn fixed_sums(layout: &CellLayout, atten: &AttenuationProfile, k: usize) -> FixedSums {
    let mut s = FixedSums { contaminating_sq: 0.0, sharing: 0.0, sharing_others: 0.0, non_sharing: 0.0, all: 0.0 };
    for j in 0..layout.cell_count() {
        let row = atten.mu_row(j);
        let row_sum: f64 = row.iter().sum();
        s.all += row_sum;
        if layout.shares_pilots(j) {
            s.sharing += row[k];
            s.sharing_others += row_sum - row[k];
            if j != 0 {
                s.contaminating_sq += row[k] * row[k];
            }
        } else {
            s.non_sharing += row_sum;
        }
    }
    s
}

/// MR reciprocal for UE `k`; identical on every antenna.
fn mr_fixed_value(params: &SystemParams, eps: f64, s: &FixedSums) -> f64 {
    let ratio = params.n as f64 / params.m as f64;
    let estimation = 1.0 / (params.omega as f64 * params.k as f64 * params.snr) + s.sharing;
    let received = 1.0 / params.snr + s.all;
    (1.0 + eps) * s.contaminating_sq + eps + ratio * estimation * received
}

pub fn inv_sinr_mr_fixed(
    params: &SystemParams,
    layout: &CellLayout,
    atten: &AttenuationProfile,
    corr: &TxCorrelation,
) -> Result<SinrProfile> {
    check_fixed_inputs(params, layout, atten, corr)?;
    let rows = (0..params.k as usize)
        .map(|k| {
            let v = mr_fixed_value(params, corr.eps_s, &fixed_sums(layout, atten, k));
            vec![v; params.n as usize]
        })
        .collect();
    SinrProfile::new(rows, Provenance::ClosedFormFixed)
}

pub fn inv_sinr_zf_fixed(
    params: &SystemParams,
    layout: &CellLayout,
    atten: &AttenuationProfile,
    corr: &TxCorrelation,
) -> Result<SinrProfile> {
    let zf = SystemParams { combiner: Combiner::Zf, ..*params };
    check_fixed_inputs(&zf, layout, atten, corr)?;
    let theta = params.theta();
    let dof = (params.m - params.n * params.k) as f64;
    let rows = (0..params.k as usize)
        .map(|k| {
            let s = fixed_sums(layout, atten, k);
            let bracket = s.sharing + theta * s.sharing_others + s.non_sharing + 1.0 / params.snr;
            corr.r_diag
                .iter()
                .map(|r| s.contaminating_sq + r * params.n as f64 / dof * s.sharing * bracket)
                .collect()
        })
        .collect();
    SinrProfile::new(rows, Provenance::ClosedFormFixed)
}

/// Fixed-location reciprocals for `params.combiner`.
pub fn inv_sinr_fixed(
    params: &SystemParams,
    layout: &CellLayout,
    atten: &AttenuationProfile,
    corr: &TxCorrelation,
) -> Result<SinrProfile> {
    match params.combiner {
        Combiner::Mr => inv_sinr_mr_fixed(params, layout, atten, corr),
        Combiner::Zf => inv_sinr_zf_fixed(params, layout, atten, corr),
    }
}

/// Large-M limit of the fixed-location reciprocal for each UE.
pub fn inv_sinr_limit_fixed(
    combiner: Combiner,
    layout: &CellLayout,
    atten: &AttenuationProfile,
    corr: &TxCorrelation,
) -> Vec<f64> {
    (0..atten.ues_per_cell())
        .map(|k| {
            let s = fixed_sums(layout, atten, k);
            match combiner {
                Combiner::Mr => (1.0 + corr.eps_s) * s.contaminating_sq + corr.eps_s,
                Combiner::Zf => s.contaminating_sq,
            }
        })
        .collect()
}

/// Moment sums entering the random-location closed forms.
struct MomentSums {
    contaminating_sq: f64,
    sharing: f64,
    non_sharing: f64,
    all: f64,
    contaminating_var: f64,
}

fn moment_sums(layout: &CellLayout, m: &InterferenceMoments) -> MomentSums {
    let mut s = MomentSums { contaminating_sq: 0.0, sharing: 0.0, non_sharing: 0.0, all: 0.0, contaminating_var: 0.0 };
    for j in 0..layout.cell_count() {
        s.all += m.mean[j];
        if layout.shares_pilots(j) {
            s.sharing += m.mean[j];
            if j != 0 {
                s.contaminating_sq += m.mean_sq[j];
                s.contaminating_var += m.variance[j];
            }
        } else {
            s.non_sharing += m.mean[j];
        }
    }
    s
}

/// Location-averaged reciprocals `kappa_n`, one row shared by all UEs.
/// `chi^2` is their mean over antennas.
pub fn inv_sinr_random(
    params: &SystemParams,
    layout: &CellLayout,
    moments: &InterferenceMoments,
    corr: &TxCorrelation,
    include_variance: bool,
) -> Result<SinrProfile> {
    params.validate()?;
    if layout.reuse_factor() != params.omega {
        return Err(Error::invalid("omega", "layout reuse differs from parameters"));
    }
    if moments.cells() != layout.cell_count() {
        return Err(Error::invalid("moments", "one entry per cell required"));
    }
    if corr.antennas != params.n as usize {
        return Err(Error::invalid("correlation", "matrix size differs from N"));
    }
    let s = moment_sums(layout, moments);
    let n = params.n as f64;
    let k = params.k as f64;
    let row: Vec<f64> = match params.combiner {
        Combiner::Mr => {
            let ratio = n / params.m as f64;
            let mut v = (1.0 + corr.eps_s) * s.contaminating_sq
                + corr.eps_s
                + ratio
                    * (1.0 / (params.omega as f64 * k * params.snr) + s.sharing)
                    * (1.0 / params.snr + k * s.all);
            if include_variance {
                v += ratio * s.contaminating_var;
            }
            vec![v; params.n as usize]
        }
        Combiner::Zf => {
            let theta = params.theta();
            let dof = (params.m - params.n * params.k) as f64;
            let bracket =
                s.sharing + (k - 1.0) * theta * s.sharing + k * s.non_sharing + 1.0 / params.snr;
            corr.r_diag
                .iter()
                .map(|r| {
                    let scale = r * n / dof;
                    let mut v = s.contaminating_sq + scale * s.sharing * bracket;
                    if include_variance {
                        v += scale * s.contaminating_var;
                    }
                    v
                })
                .collect()
        }
    };
    SinrProfile::new(vec![row], Provenance::ClosedFormRandom)
}

/// Large-M limit of `chi^2`.
pub fn chi_sq_limit(combiner: Combiner, layout: &CellLayout, moments: &InterferenceMoments, corr: &TxCorrelation) -> f64 {
    let s = moment_sums(layout, moments);
    match combiner {
        Combiner::Mr => (1.0 + corr.eps_s) * s.contaminating_sq + corr.eps_s,
        Combiner::Zf => s.contaminating_sq,
    }
}

/// Location-averaged SE bound; every UE gets the same rate.
pub fn se_random_lb(
    params: &SystemParams,
    layout: &CellLayout,
    moments: &InterferenceMoments,
    corr: &TxCorrelation,
    include_variance: bool,
) -> Result<SeResult> {
    let sinr = inv_sinr_random(params, layout, moments, corr, include_variance)?;
    se_bound(params, &sinr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial_form(antennas: u32, sigma_sq: f64) -> f64 {
        // Beta-function identity: sum_r C(n, r)(-1)^r/(r + c) = n! / prod_{i=0..n} (c + i).
        let c = (antennas as f64 + 2.0 * sigma_sq) / (antennas as f64 + sigma_sq);
        (0..antennas - 1).map(|i| (i as f64 + 1.0) / (c + i as f64)).product()
    }

    #[test]
    fn two_antennas_closed_form() {
        let p = detection_probability(2, 2.0).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn series_matches_product_identity() {
        for n in [2, 4, 8, 16] {
            for s in [1e-3, 0.1, 1.0, 7.5, 1e3] {
                let p = detection_probability_series(n, s).unwrap();
                assert!((p - factorial_form(n, s)).abs() < 1e-13, "N={n}, s={s}");
            }
        }
    }

    #[test]
    fn series_and_integral_agree_at_switch() {
        for s in [1e-2, 0.3, 1.0, 10.0, 1e3] {
            let a = detection_probability_series(16, s).unwrap();
            let b = detection_probability_integral(16, s).unwrap();
            assert!((a - b).abs() < 1e-9, "s={s}: {a} vs {b}");
        }
        let p = detection_probability(32, 0.5).unwrap();
        assert!((p - factorial_form(32, 0.5)).abs() < 1e-10);
    }

    #[test]
    fn normalizer_identity() {
        for n in [2, 4, 8, 16, 32] {
            assert!((detection_normalizer(n).unwrap() - 1.0 / (n - 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn detection_limits() {
        for n in [2, 4, 8, 16, 32] {
            assert!((detection_probability(n, 1e-12).unwrap() - 1.0).abs() < 1e-9);
            assert!((detection_probability(n, 1e9).unwrap() - 1.0 / n as f64).abs() < 1e-6);
        }
        assert!(matches!(detection_probability(1, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rate_example() {
        let params = SystemParams { m: 512, n: 2, k: 10, t: 1000, omega: 3, snr: 10.0, combiner: Combiner::Mr, theta: None };
        assert_eq!(params.pilot_len(), 60);
        let sinr = SinrProfile::new(vec![vec![2.0, 2.0]; 10], Provenance::ClosedFormFixed).unwrap();
        let se = se_lower_bound_fixed(&params, &sinr).unwrap();
        let p: f64 = 2.0 / 3.0;
        let want = 0.94 * (2.0 + p * p.log2() + (1.0 - p) * (1.0 - p).log2());
        assert!((se.rate[0] - want).abs() < 1e-12);
        assert!((se.rate[0] - 1.0168).abs() < 1e-4);
        assert!((se.sum_rate - 10.0 * want).abs() < 1e-11);
    }

    #[test]
    fn penalty_limits() {
        let c = sm_rate(4, 1e-14, 1.0).unwrap();
        assert!(c.detection_penalty.abs() < 1e-9);
        let c = sm_rate(4, 1e12, 1.0).unwrap();
        assert!((c.detection_penalty + 2.0).abs() < 1e-6);
        assert!((c.index_term + c.detection_penalty).abs() < 1e-6);
    }

    #[test]
    fn single_antenna_examples() {
        let params = SystemParams { m: 512, n: 1, k: 10, t: 1000, omega: 3, snr: 10.0, combiner: Combiner::Mr, theta: None };
        let unit = SinrProfile::new(vec![vec![1.0]; 10], Provenance::ClosedFormFixed).unwrap();
        assert!((se_single_antenna(&params, &unit).unwrap().rate[0] - 0.97).abs() < 1e-15);
        let third = SinrProfile::new(vec![vec![1.0 / 3.0]], Provenance::ClosedFormRandom).unwrap();
        assert!((se_single_antenna(&params, &third).unwrap().rate[0] - 1.94).abs() < 1e-14);
        assert!(se_lower_bound_fixed(&params, &unit).is_err());
        let two = SystemParams { n: 2, ..params };
        assert!(se_single_antenna(&two, &unit).is_err());
    }

    #[test]
    fn feasibility_checks() {
        let base = SystemParams { m: 20, n: 2, k: 10, t: 1000, omega: 3, snr: 10.0, combiner: Combiner::Zf, theta: None };
        assert!(matches!(base.validate(), Err(Error::RankDeficient { m: 20, streams: 20 })));
        let short = SystemParams { t: 60, combiner: Combiner::Mr, ..base };
        assert!(matches!(short.validate(), Err(Error::PilotOverhead { pilot_len: 60, frame_len: 60 })));
        let odd = SystemParams { n: 3, combiner: Combiner::Mr, ..base };
        assert!(odd.validate().is_err());
    }
}
