use rand::Rng;

use super::normal::{quantile_unchecked, std_normal_cdf};
use crate::error::{Error, Result};

/// Standardized distance into a tail beyond which inverse-CDF sampling is
/// replaced by exponential-proposal rejection.
pub const TAIL_THRESHOLD: f64 = 6.0;

/// Uniform draw in the open interval (0, 1).
#[inline]
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Exact draw from `N(mu, sigma^2)` restricted to `[lo, hi]`.
pub fn sample_truncated_univariate<R: Rng + ?Sized>(mu: f64, sigma: f64, lo: f64, hi: f64, rng: &mut R) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "truncated normal needs finite mean and positive scale, got ({mu}, {sigma})"
        )));
    }
    if !(lo < hi) {
        return Err(Error::InvalidBounds { index: 0, lower: lo, upper: hi });
    }
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    let x = mu + sigma * standard_truncated(a, b, rng);
    Ok(x.clamp(lo, hi))
}

/// Draw from the standard normal restricted to `[a, b]`, `a < b`.
pub(crate) fn standard_truncated<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    debug_assert!(a < b);
    if a >= TAIL_THRESHOLD {
        tail_rejection(a, b, rng)
    } else if b <= -TAIL_THRESHOLD {
        -tail_rejection(-b, -a, rng)
    } else if a >= 0.0 {
        // reflect so both CDF values stay below one half
        -inverse_cdf(-b, -a, rng)
    } else {
        inverse_cdf(a, b, rng)
    }
}

fn inverse_cdf<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let pa = std_normal_cdf(a);
    let pb = std_normal_cdf(b);
    let u = pa + (pb - pa) * open_unit(rng);
    if u <= 0.0 || u >= 1.0 {
        // interval narrower than the CDF resolution
        return if u <= 0.0 { a.max(-38.0) } else { b.min(38.0) };
    }
    quantile_unchecked(u).clamp(a, b)
}

/// Rejection from a translated exponential on `[a, b]`, `a > 0`, with the
/// rate that maximizes acceptance for the one-sided tail.
fn tail_rejection<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    let width = b - a;
    // mass of the exponential proposal inside [a, b]
    let cap = if width.is_finite() { -(-rate * width).exp_m1() } else { 1.0 };
    loop {
        let e = -(-cap * open_unit(rng)).ln_1p() / rate;
        let x = a + e;
        let log_accept = -0.5 * (x - rate) * (x - rate);
        if open_unit(rng).ln() <= log_accept {
            return x.min(b);
        }
    }
}

/// Mean and variance of the standard normal truncated to `[a, b]`.
pub fn truncated_moments(a: f64, b: f64) -> (f64, f64) {
    use super::normal::{ln_normal_interval, std_normal_pdf};
    let z = ln_normal_interval(a, b).exp();
    let pa = if a.is_finite() { std_normal_pdf(a) } else { 0.0 };
    let pb = if b.is_finite() { std_normal_pdf(b) } else { 0.0 };
    let apa = if a.is_finite() { a * pa } else { 0.0 };
    let bpb = if b.is_finite() { b * pb } else { 0.0 };
    let mean = (pa - pb) / z;
    let var = 1.0 + (apa - bpb) / z - mean * mean;
    (mean, var)
}
