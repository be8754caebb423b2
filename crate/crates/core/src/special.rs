//! Zero-order Bessel function of the first kind.

use std::f64::consts::{FRAC_PI_4, PI};

/// Crossover between the ascending series and the Hankel expansion.
const SERIES_LIMIT: f64 = 12.0;

/// `J0(x)` with absolute error below 1e-10 over the real line.
///
/// Ascending power series below |x| = 12, Hankel asymptotic expansion
/// (truncated at its smallest term) above.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x < SERIES_LIMIT {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 1.0_f64;
    loop {
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 0.25 * x * x {
            break;
        }
        k += 1.0;
        if k > 200.0 {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // a_k = prod_{i=1..k} (-(2i-1)^2) / (k! 8^k); term_k = a_k / x^k.
    let mut p = 1.0_f64;
    let mut q = 0.0_f64;
    let mut term = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..100_u32 {
        let odd = (2 * k - 1) as f64;
        let next = term * (-odd * odd) / (8.0 * k as f64 * x);
        if next.abs() >= last.abs() || next.abs() < 1e-17 {
            break;
        }
        term = next;
        last = next;
        // Signs: P = sum (-1)^m a_{2m}/x^{2m}, Q = sum (-1)^m a_{2m+1}/x^{2m+1}.
        let m = (k / 2) as i32;
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
