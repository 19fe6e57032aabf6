//! Reference samplers used to check the tilted sampler.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{lower_mul_vec, precision_from_factor, sample_truncated_univariate};
use crate::rng::StreamRng;

use super::LowDimTarget;

/// Naive rejection: draw `L eps` until it lands inside the bounds.
pub fn sample_rejection_oracle<R: Rng + ?Sized>(
    target: &LowDimTarget<'_>,
    rng: &mut R,
    max_tries: u64,
) -> Result<Vec<f64>> {
    let q = target.dim();
    let mut eps = vec![0.0; q];
    for _ in 0..max_tries {
        for e in &mut eps {
            *e = rng.sample(rand_distr::StandardNormal);
        }
        let x: Vec<f64> = lower_mul_vec(target.chol(), &eps).iter().copied().collect();
        if x.iter().zip(target.lower()).zip(target.upper()).all(|((v, lo), hi)| v >= lo && v <= hi) {
            return Ok(x);
        }
    }
    Err(Error::OracleExhausted { tries: max_tries })
}

/// Systematic-scan Gibbs sampler over the full conditionals.
#[derive(Clone, Debug)]
pub struct GibbsChain {
    precision: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<f64>,
}

impl GibbsChain {
    /// `start` is projected into the box.
    pub fn new(target: &LowDimTarget<'_>, start: Vec<f64>) -> Result<Self> {
        let q = target.dim();
        if start.len() != q {
            return Err(Error::DimensionMismatch { expected: q, found: start.len() });
        }
        let state = start
            .iter()
            .zip(target.lower().iter().zip(target.upper()))
            .map(|(&x, (&lo, &hi))| if x.is_finite() { x.clamp(lo, hi) } else { 0.0f64.clamp(lo, hi) })
            .collect();
        Ok(Self {
            precision: precision_from_factor(target.chol()),
            lower: target.lower().to_vec(),
            upper: target.upper().to_vec(),
            state,
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    /// One pass over all coordinates in index order.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let q = self.state.len();
        for j in 0..q {
            let qjj = self.precision[(j, j)];
            // The precision is symmetric, so column j doubles as row j.
            let col = &self.precision.as_slice()[j * q..(j + 1) * q];
            let off = dot(col, &self.state) - qjj * self.state[j];
            let mean = -off / qjj;
            let sd = qjj.recip().sqrt();
            self.state[j] = sample_truncated_univariate(mean, sd, self.lower[j], self.upper[j], rng)?;
        }
        Ok(())
    }
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `count` states of a Gibbs chain started at the box projection of zero,
/// after `burnin` sweeps and keeping every `thin`-th sweep.
pub fn sample_gibbs_oracle(
    target: &LowDimTarget<'_>,
    rng: &mut StreamRng,
    burnin: usize,
    thin: usize,
    count: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut chain = GibbsChain::new(target, vec![0.0; target.dim()])?;
    for _ in 0..burnin {
        chain.sweep(rng)?;
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..thin.max(1) {
            chain.sweep(rng)?;
        }
        out.push(chain.state().to_vec());
    }
    Ok(out)
}
