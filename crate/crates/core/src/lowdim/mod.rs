//! Exact sampling from low-dimensional truncated normals `TN(a, b; 0, Sigma)`.
//!
//! The main sampler is accept-reject with an exponentially tilted
//! proposal (see [`TiltedProposal`]); when its acceptance rate is too low
//! for a given target it falls back to a Gibbs chain and records the event.

mod oracle;
mod tilting;

use std::borrow::Cow;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gaussian::{cholesky, open_unit, sample_truncated_univariate, JitterPolicy};

pub use oracle::{sample_gibbs_oracle, sample_rejection_oracle, GibbsChain};
pub use tilting::TiltedProposal;

/// A zero-mean truncated normal target with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct LowDimTarget<'a> {
    lower: Cow<'a, [f64]>,
    upper: Cow<'a, [f64]>,
    cov: Cow<'a, DMatrix<f64>>,
    chol: Cow<'a, DMatrix<f64>>,
}

impl<'a> LowDimTarget<'a> {
    /// Borrows a covariance and its lower Cholesky factor.
    pub fn new(lower: &'a [f64], upper: &'a [f64], cov: &'a DMatrix<f64>, chol: &'a DMatrix<f64>) -> Result<Self> {
        let t = Self {
            lower: Cow::Borrowed(lower),
            upper: Cow::Borrowed(upper),
            cov: Cow::Borrowed(cov),
            chol: Cow::Borrowed(chol),
        };
        t.validate()?;
        Ok(t)
    }

    /// Factors `cov` (with the default jitter policy) and takes ownership.
    pub fn from_covariance(lower: Vec<f64>, upper: Vec<f64>, cov: DMatrix<f64>) -> Result<LowDimTarget<'static>> {
        let chol = cholesky(&cov, JitterPolicy::default())?.into_factor();
        let t = LowDimTarget {
            lower: Cow::Owned(lower),
            upper: Cow::Owned(upper),
            cov: Cow::Owned(cov),
            chol: Cow::Owned(chol),
        };
        t.validate()?;
        Ok(t)
    }

    fn validate(&self) -> Result<()> {
        let q = self.cov.nrows();
        if q == 0 {
            return Err(Error::NothingToSample);
        }
        for found in [self.cov.ncols(), self.chol.nrows(), self.chol.ncols(), self.lower.len(), self.upper.len()] {
            if found != q {
                return Err(Error::DimensionMismatch { expected: q, found });
            }
        }
        for (index, (&lower, &upper)) in self.lower.iter().zip(self.upper.iter()).enumerate() {
            if !(lower < upper) || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
                return Err(Error::InvalidBounds { index, lower, upper });
            }
        }
        if (0..q).any(|k| !(self.chol[(k, k)] > 0.0) || !self.chol[(k, k)].is_finite()) {
            return Err(Error::NonFinite("Cholesky factor"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }
}

/// Tuning of [`sample_lowdim_tmvn`].
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerPolicy {
    /// Acceptance rate below which the Gibbs fallback is used.
    pub min_accept: f64,
    /// Proposals per monitoring window.
    pub trial_window: usize,
    /// Gibbs sweeps before the returned state; `None` means `100 * q`.
    pub gibbs_burnin: Option<usize>,
    /// Greedy variable reordering before tilting.
    pub reorder: bool,
    /// Optimize the tilt; plain separation of variables otherwise.
    pub tilt: bool,
    pub max_newton_iter: usize,
}

impl Default for SamplerPolicy {
    fn default() -> Self {
        Self { min_accept: 1e-3, trial_window: 200, gibbs_burnin: None, reorder: true, tilt: true, max_newton_iter: 50 }
    }
}

/// Counters accumulated over calls to the low-dimensional sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplerStats {
    pub calls: u64,
    /// Calls answered by the closed-form univariate sampler.
    pub univariate: u64,
    pub proposed: u64,
    pub accepted: u64,
    /// Calls answered by the Gibbs fallback.
    pub fallbacks: u64,
    /// Tilt optimizations that did not converge (zero tilt used instead).
    pub tilt_failures: u64,
}

impl SamplerStats {
    pub fn merge(&mut self, other: &SamplerStats) {
        self.calls += other.calls;
        self.univariate += other.univariate;
        self.proposed += other.proposed;
        self.accepted += other.accepted;
        self.fallbacks += other.fallbacks;
        self.tilt_failures += other.tilt_failures;
    }

    /// `accepted / proposed`, or `None` before any proposal.
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// One draw from the target.
///
/// Every call is exact unless it is answered by the Gibbs fallback, which
/// happens when whole monitoring windows pass without an acceptance and
/// the proposals spent exceed `1 / min_accept`.
pub fn sample_lowdim_tmvn<R: Rng + ?Sized>(
    target: &LowDimTarget<'_>,
    policy: &SamplerPolicy,
    rng: &mut R,
    stats: &mut SamplerStats,
) -> Result<Vec<f64>> {
    stats.calls += 1;
    let q = target.dim();
    if q == 1 {
        stats.univariate += 1;
        let sd = target.chol()[(0, 0)];
        return Ok(vec![sample_truncated_univariate(0.0, sd, target.lower()[0], target.upper()[0], rng)?]);
    }
    let proposal = if policy.tilt {
        let p = TiltedProposal::optimized(target, policy.reorder, policy.max_newton_iter);
        if !p.is_tilted() {
            stats.tilt_failures += 1;
        }
        p
    } else {
        TiltedProposal::plain(target)
    };
    sample_with_proposal(target, &proposal, policy, rng, stats)
}

/// As [`sample_lowdim_tmvn`] with a prebuilt proposal, for repeated draws
/// from the same target.
pub fn sample_with_proposal<R: Rng + ?Sized>(
    target: &LowDimTarget<'_>,
    proposal: &TiltedProposal,
    policy: &SamplerPolicy,
    rng: &mut R,
    stats: &mut SamplerStats,
) -> Result<Vec<f64>> {
    let q = target.dim();
    let window = policy.trial_window.max(1) as u64;
    let mut z = vec![0.0; q];
    let mut proposed = 0u64;
    loop {
        proposed += 1;
        stats.proposed += 1;
        let log_ratio = proposal.draw(rng, &mut z);
        if -open_unit(rng).ln() > proposal.log_bound() - log_ratio {
            stats.accepted += 1;
            return Ok(proposal.to_target(&z));
        }
        if proposed.is_multiple_of(window) && proposed as f64 * policy.min_accept >= 1.0 {
            stats.fallbacks += 1;
            let sweeps = policy.gibbs_burnin.unwrap_or(100 * q);
            let mut chain = GibbsChain::new(target, proposal.mode())?;
            for _ in 0..sweeps {
                chain.sweep(rng)?;
            }
            return Ok(chain.state().to_vec());
        }
    }
}
