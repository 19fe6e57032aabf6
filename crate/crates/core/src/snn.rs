//! Sequential nearest-neighbor sampling.
//!
//! Each coordinate `i` (in the chosen ordering) is drawn by sampling the
//! small truncated normal of its neighbor block `c_l(i)` given the already
//! sampled block `c_p(i)`, and keeping only the entry for `i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{conditional_factors, ConditionalFactor, JitterPolicy};
use crate::geometry::{build_neighbor_plan, order, NeighborPlan, NeighborPolicy, Ordering, OrderingKind};
use crate::kernel::{Covariance, CovarianceModel, LocationSet};
use crate::lowdim::{sample_lowdim_tmvn, LowDimTarget, SamplerPolicy, SamplerStats};
use crate::rng::{substream, Domain};

/// `TN(lower, upper; 0, Sigma)` over indexed locations.
#[derive(Clone, Debug)]
pub struct TruncationProblem {
    covariance: Covariance,
    /// Coordinates used for ordering and neighbor search.
    search: LocationSet,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TruncationProblem {
    /// Kernel covariance over `locations`. Anisotropic kernels search for
    /// neighbors in range-scaled coordinates.
    pub fn from_kernel(
        model: CovarianceModel,
        locations: LocationSet,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let search = model.search_locations(&locations);
        let covariance = Covariance::kernel(model, locations)?;
        Self::assemble(covariance, search, lower, upper)
    }

    /// Explicit covariance. Without locations, index `i` sits at `x = i`.
    pub fn from_dense(
        matrix: nalgebra::DMatrix<f64>,
        locations: Option<LocationSet>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let n = matrix.nrows();
        let search = match locations {
            Some(l) => l,
            None => LocationSet::from_flat((0..n).map(|i| i as f64).collect(), 1, Default::default())?,
        };
        Self::assemble(Covariance::dense(matrix)?, search, lower, upper)
    }

    fn assemble(covariance: Covariance, search: LocationSet, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = covariance.len();
        for found in [search.len(), lower.len(), upper.len()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        if n == 0 {
            return Err(Error::Empty("truncation problem"));
        }
        if lower.iter().chain(&upper).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("bounds"));
        }
        Ok(Self { covariance, search, lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn covariance(&self) -> &Covariance {
        &self.covariance
    }

    pub fn search_locations(&self) -> &LocationSet {
        &self.search
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

/// Neighbor selection rule for [`SnnOptions`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NeighborRule {
    /// The `m` nearest locations.
    #[default]
    All,
    /// Half of the budget from fixed (observed) locations, half from
    /// sampled ones; see [`NeighborPolicy::SplitPools`].
    SplitFixed,
}

/// Settings shared by planning and sampling.
#[derive(Clone, Debug)]
pub struct SnnOptions {
    pub m: usize,
    pub ordering: OrderingKind,
    pub neighbors: NeighborRule,
    pub jitter: JitterPolicy,
    pub sampler: SamplerPolicy,
}

impl Default for SnnOptions {
    fn default() -> Self {
        Self {
            m: 30,
            ordering: OrderingKind::Random,
            neighbors: NeighborRule::All,
            jitter: JitterPolicy::default(),
            sampler: SamplerPolicy::default(),
        }
    }
}

impl SnnOptions {
    pub fn with_m(m: usize) -> Self {
        Self { m, ..Self::default() }
    }
}

/// Ordering, neighbor sets and conditional factors, ready for sampling.
///
/// Positions `0..n_fixed` of the ordering hold fixed values and are never
/// sampled; they only enter through the regression weights.
#[derive(Clone, Debug)]
pub struct SnnPlan {
    ordering: Ordering,
    plan: NeighborPlan,
    /// Factors for positions `n_fixed..n`.
    factors: Vec<ConditionalFactor>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    fixed: Vec<f64>,
    sampler: SamplerPolicy,
}

impl SnnPlan {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn m(&self) -> usize {
        self.plan.m()
    }

    pub fn ordering(&self) -> &Ordering {
        &self.ordering
    }

    pub fn neighbor_plan(&self) -> &NeighborPlan {
        &self.plan
    }

    /// Number of fixed positions at the start of the ordering.
    pub fn n_fixed(&self) -> usize {
        self.fixed.len()
    }

    /// Factors for ordered position `i`; `None` for fixed positions.
    pub fn factor(&self, i: usize) -> Option<&ConditionalFactor> {
        i.checked_sub(self.n_fixed()).and_then(|k| self.factors.get(k))
    }

    /// Largest jitter added to any conditional block.
    pub fn max_jitter(&self) -> f64 {
        self.factors.iter().map(|f| f.jitter).fold(0.0, f64::max)
    }

    pub fn sampler_policy(&self) -> &SamplerPolicy {
        &self.sampler
    }
}

/// Samples in original index order with per-sample telemetry.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleEnsemble {
    /// One row per sample, `n` entries each.
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
    pub diagnostics: Vec<SamplerStats>,
}

impl SampleEnsemble {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Telemetry summed over samples.
    pub fn total_stats(&self) -> SamplerStats {
        let mut s = SamplerStats::default();
        for d in &self.diagnostics {
            s.merge(d);
        }
        s
    }

    /// Per-coordinate ensemble mean.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.samples.first().map_or(0, Vec::len);
        let mut m = vec![0.0; n];
        for row in &self.samples {
            for (a, v) in m.iter_mut().zip(row) {
                *a += v;
            }
        }
        let k = self.samples.len() as f64;
        m.iter_mut().for_each(|a| *a /= k);
        m
    }

    /// Values of coordinate `j` across samples.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|r| r[j]).collect()
    }
}

/// Orders, builds neighbor sets and computes all conditional factors.
pub fn precompute(problem: &TruncationProblem, options: &SnnOptions, seed: u64) -> Result<SnnPlan> {
    let ordering = order(problem.search_locations(), options.ordering, seed);
    precompute_with_ordering(problem, options, ordering, &[])
}

/// As [`precompute`] with an explicit ordering. The first `fixed.len()`
/// ordered positions take the given values instead of being sampled.
pub fn precompute_with_ordering(
    problem: &TruncationProblem,
    options: &SnnOptions,
    ordering: Ordering,
    fixed: &[f64],
) -> Result<SnnPlan> {
    let n = problem.len();
    if ordering.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: ordering.len() });
    }
    if fixed.len() > n {
        return Err(Error::DimensionMismatch { expected: n, found: fixed.len() });
    }
    if fixed.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fixed values"));
    }
    let perm = ordering.permutation();
    let lower: Vec<f64> = perm.iter().map(|&j| problem.lower[j]).collect();
    let upper: Vec<f64> = perm.iter().map(|&j| problem.upper[j]).collect();
    for i in fixed.len()..n {
        if !(lower[i] < upper[i]) || lower[i] == f64::INFINITY || upper[i] == f64::NEG_INFINITY {
            return Err(Error::InvalidBounds { index: perm[i], lower: lower[i], upper: upper[i] });
        }
    }
    let policy = match options.neighbors {
        NeighborRule::All => NeighborPolicy::All,
        NeighborRule::SplitFixed => NeighborPolicy::SplitPools { pools: (0..n).map(|i| i >= fixed.len()).collect() },
    };
    let ordered = problem.search_locations().select(perm);
    let plan = build_neighbor_plan(&ordered, options.m, &policy)?;
    let factors =
        (fixed.len()..n)
            .into_par_iter()
            .map(|i| {
                let prev: Vec<usize> = plan.prev(i).iter().map(|&p| perm[p]).collect();
                let later: Vec<usize> = plan.later(i).iter().map(|&p| perm[p]).collect();
                conditional_factors(problem.covariance(), &prev, &later, options.jitter)
                    .map_err(|e| Error::Factorization { index: i, neighbors: plan.neighbors(i), source: Box::new(e) })
            })
            .collect::<Result<Vec<_>>>()?;
    Ok(SnnPlan { ordering, plan, factors, lower, upper, fixed: fixed.to_vec(), sampler: options.sampler.clone() })
}

/// Draws `n_samples` samples. Sample `k` uses substream `k` of `seed`, so
/// the output does not depend on the rayon thread count.
pub fn sample(plan: &SnnPlan, n_samples: usize, seed: u64) -> Result<SampleEnsemble> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("number of samples must be >= 1".into()));
    }
    let draws = (0..n_samples).into_par_iter().map(|k| sample_one(plan, k, seed)).collect::<Result<Vec<_>>>()?;
    let (samples, diagnostics) = draws.into_iter().unzip();
    Ok(SampleEnsemble { samples, seed, diagnostics })
}

fn sample_one(plan: &SnnPlan, k: usize, seed: u64) -> Result<(Vec<f64>, SamplerStats)> {
    let n = plan.len();
    let n_fixed = plan.n_fixed();
    let mut rng = substream(seed, Domain::Sampling, k as u64);
    let mut stats = SamplerStats::default();
    let mut y = vec![0.0; n];
    y[..n_fixed].copy_from_slice(&plan.fixed);
    let mut lo = Vec::with_capacity(plan.m());
    let mut hi = Vec::with_capacity(plan.m());
    for i in n_fixed..n {
        let f = &plan.factors[i - n_fixed];
        let prev = plan.plan.prev(i);
        let later = plan.plan.later(i);
        // conditional mean of the block given sampled predecessors
        let mu: Vec<f64> =
            (0..later.len()).map(|r| prev.iter().enumerate().map(|(c, &p)| f.weights[(r, c)] * y[p]).sum()).collect();
        lo.clear();
        hi.clear();
        lo.extend(later.iter().zip(&mu).map(|(&p, m)| plan.lower[p] - m));
        hi.extend(later.iter().zip(&mu).map(|(&p, m)| plan.upper[p] - m));
        let wrap = |e: Error| Error::Sampling { sample: k, index: i, source: Box::new(e) };
        let target = LowDimTarget::new(&lo, &hi, &f.covariance, &f.chol).map_err(wrap)?;
        let joint = sample_lowdim_tmvn(&target, &plan.sampler, &mut rng, &mut stats).map_err(wrap)?;
        y[i] = (marginal_keep_first(&joint).map_err(wrap)? + mu[0]).clamp(plan.lower[i], plan.upper[i]);
    }
    let mut out = vec![0.0; n];
    for (pos, &orig) in plan.ordering.permutation().iter().enumerate() {
        out[orig] = y[pos];
    }
    Ok((out, stats))
}

/// The entry of a joint block draw that belongs to the coordinate being
/// sampled; the rest of the block is discarded.
pub fn marginal_keep_first(joint: &[f64]) -> Result<f64> {
    joint.first().copied().ok_or(Error::Empty("joint sample"))
}
