//! Partially censored Gaussian process data: posterior sampling of the
//! latent values at censored sites and kriging from posterior samples.
//!
//! Observed sites are the limit of intervals shrinking to a point. They are
//! placed first in the ordering and held fixed, so they act only through
//! the regression weights of later sites.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{backward_solve_transpose, cholesky, conditional_factors, forward_solve, JitterPolicy};
use crate::geometry::{order, KdTree, Ordering};
use crate::kernel::{Covariance, CovarianceModel, LocationSet};
use crate::lowdim::{sample_gibbs_oracle, LowDimTarget};
use crate::rng::{substream, Domain};
use crate::snn::{precompute_with_ordering, sample, SampleEnsemble, SnnOptions, SnnPlan, TruncationProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteStatus {
    Observed,
    Censored,
}

/// Sites with either an exact value or an interval known to contain it.
#[derive(Clone, Debug, PartialEq)]
pub struct CensoredDataset {
    locations: LocationSet,
    status: Vec<SiteStatus>,
    /// Observed value; `None` at censored sites.
    values: Vec<Option<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl CensoredDataset {
    /// Validates lengths, observed values and censoring intervals.
    /// `lower`/`upper` are ignored at observed sites and stored there as
    /// the unbounded interval.
    pub fn new(
        locations: LocationSet,
        status: Vec<SiteStatus>,
        values: Vec<Option<f64>>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let n = locations.len();
        for found in [status.len(), values.len(), lower.len(), upper.len()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        for i in 0..n {
            match status[i] {
                SiteStatus::Observed => match values[i] {
                    Some(v) if v.is_finite() => {}
                    _ => {
                        return Err(Error::Data { row: i, message: "observed site needs a finite value".into() });
                    }
                },
                SiteStatus::Censored => {
                    if !(lower[i] < upper[i]) || lower[i] == f64::INFINITY || upper[i] == f64::NEG_INFINITY {
                        return Err(Error::Data {
                            row: i,
                            message: format!("censoring interval [{}, {}] is empty", lower[i], upper[i]),
                        });
                    }
                }
            }
        }
        let observed = |i: usize| status[i] == SiteStatus::Observed;
        let values = (0..n).map(|i| if observed(i) { values[i] } else { None }).collect();
        let lower = (0..n).map(|i| if observed(i) { f64::NEG_INFINITY } else { lower[i] }).collect();
        let upper = (0..n).map(|i| if observed(i) { f64::INFINITY } else { upper[i] }).collect();
        Ok(Self { locations, status, values, lower, upper })
    }

    /// Left-censors `field` at `threshold`: values below it become the
    /// interval `(-inf, threshold]`, the rest are observed.
    pub fn censor_below(locations: LocationSet, field: &[f64], threshold: f64) -> Result<Self> {
        let n = field.len();
        let status: Vec<SiteStatus> =
            field.iter().map(|&v| if v < threshold { SiteStatus::Censored } else { SiteStatus::Observed }).collect();
        let values = field.iter().zip(&status).map(|(&v, s)| (*s == SiteStatus::Observed).then_some(v)).collect();
        let lower = vec![f64::NEG_INFINITY; n];
        let upper = status.iter().map(|s| if *s == SiteStatus::Censored { threshold } else { f64::INFINITY }).collect();
        if n != locations.len() {
            return Err(Error::DimensionMismatch { expected: locations.len(), found: n });
        }
        Self::new(locations, status, values, lower, upper)
    }

    pub fn len(&self) -> usize {
        self.status.len()
    }

    pub fn is_empty(&self) -> bool {
        self.status.is_empty()
    }

    pub fn locations(&self) -> &LocationSet {
        &self.locations
    }

    pub fn status(&self) -> &[SiteStatus] {
        &self.status
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn observed_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.status[i] == SiteStatus::Observed).collect()
    }

    pub fn censored_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.status[i] == SiteStatus::Censored).collect()
    }
}

/// An [`SnnPlan`] whose fixed prefix is the observed sites.
#[derive(Clone, Debug)]
pub struct CensoredPlan {
    plan: SnnPlan,
    observed: Vec<usize>,
    censored: Vec<usize>,
}

impl CensoredPlan {
    pub fn snn_plan(&self) -> &SnnPlan {
        &self.plan
    }

    pub fn observed_indices(&self) -> &[usize] {
        &self.observed
    }

    pub fn censored_indices(&self) -> &[usize] {
        &self.censored
    }
}

/// Orders observed sites first, then censored ones, each group ordered by
/// `options.ordering` on its own locations. Random orderings of the
/// censored group use `seed` and the observed group a derived seed, so with
/// no observed sites the plan equals the one from [`crate::snn::precompute`].
pub fn build_censored_problem(
    data: &CensoredDataset,
    model: &CovarianceModel,
    options: &SnnOptions,
    seed: u64,
) -> Result<CensoredPlan> {
    let observed = data.observed_indices();
    let censored = data.censored_indices();
    if censored.is_empty() {
        return Err(Error::NothingToSample);
    }
    let search = model.search_locations(data.locations());
    let group_order = |group: &[usize], seed: u64| -> Vec<usize> {
        let sub = search.select(group);
        order(&sub, options.ordering, seed).permutation().iter().map(|&k| group[k]).collect()
    };
    let mut perm = group_order(&observed, seed ^ 0x6f62_7365_7276_6564);
    perm.extend(group_order(&censored, seed));
    let ordering = Ordering::from_permutation(perm, options.ordering).expect("groups partition the sites");
    let fixed: Vec<f64> = ordering.permutation()[..observed.len()]
        .iter()
        .map(|&i| data.values[i].expect("observed sites carry values"))
        .collect();
    let (lower, upper): (Vec<f64>, Vec<f64>) = (0..data.len())
        .map(|i| match data.values[i] {
            Some(v) => (v, v),
            None => (data.lower[i], data.upper[i]),
        })
        .unzip();
    let problem = TruncationProblem::from_kernel(model.clone(), data.locations().clone(), lower, upper)?;
    let plan = precompute_with_ordering(&problem, options, ordering, &fixed)?;
    Ok(CensoredPlan { plan, observed, censored })
}

/// Posterior samples of the latent field. Rows cover all sites in original
/// order (observed values echoed) when `full_field`, otherwise only the
/// censored sites in the order of [`CensoredPlan::censored_indices`].
pub fn sample_censored_posterior(
    plan: &CensoredPlan,
    n_samples: usize,
    seed: u64,
    full_field: bool,
) -> Result<SampleEnsemble> {
    let mut ens = sample(&plan.plan, n_samples, seed)?;
    if !full_field {
        for row in &mut ens.samples {
            *row = plan.censored.iter().map(|&i| row[i]).collect();
        }
    }
    Ok(ens)
}

/// Reference posterior draws for the censored sites `targets`, conditioning
/// on the observed sites `given` only, from a Gibbs chain on the exact
/// conditional truncated normal. Rows follow the order of `targets`.
#[allow(clippy::too_many_arguments)]
pub fn gibbs_benchmark(
    data: &CensoredDataset,
    model: &CovarianceModel,
    targets: &[usize],
    given: &[usize],
    burnin: usize,
    thin: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if targets.is_empty() {
        return Err(Error::NothingToSample);
    }
    for &i in targets {
        if data.status[i] != SiteStatus::Censored {
            return Err(Error::InvalidParameter(format!("benchmark target {i} is not censored")));
        }
    }
    let values: Vec<f64> = given
        .iter()
        .map(|&i| data.values[i].ok_or_else(|| Error::InvalidParameter(format!("site {i} is not observed"))))
        .collect::<Result<_>>()?;
    let cov = Covariance::kernel(model.clone(), data.locations().clone())?;
    let cond = conditional_factors(&cov, given, targets, JitterPolicy::default())?;
    let mean: Vec<f64> =
        (0..targets.len()).map(|r| values.iter().enumerate().map(|(c, v)| cond.weights[(r, c)] * v).sum()).collect();
    let lower: Vec<f64> = targets.iter().zip(&mean).map(|(&i, m)| data.lower[i] - m).collect();
    let upper: Vec<f64> = targets.iter().zip(&mean).map(|(&i, m)| data.upper[i] - m).collect();
    let target = LowDimTarget::new(&lower, &upper, &cond.covariance, &cond.chol)?;
    let mut rng = substream(seed, Domain::Benchmark, 0);
    let draws = sample_gibbs_oracle(&target, &mut rng, burnin, thin, count)?;
    Ok(draws
        .into_iter()
        .map(|d| {
            d.iter().zip(&mean).zip(targets).map(|((x, m), &i)| (x + m).clamp(data.lower[i], data.upper[i])).collect()
        })
        .collect())
}

/// Posterior predictive mean and standard deviation at new locations.
#[derive(Clone, Debug, PartialEq)]
pub struct KrigingPrediction {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Zero-mean simple kriging of each posterior sample onto `grid`, using the
/// `m` nearest sites of each grid point.
///
/// `samples` are full-field rows. The mean is averaged over samples; the
/// standard deviation combines the kriging variance with the spread of the
/// per-sample kriging means.
pub fn krige_predict(
    data: &CensoredDataset,
    samples: &[Vec<f64>],
    model: &CovarianceModel,
    grid: &LocationSet,
    m: usize,
) -> Result<KrigingPrediction> {
    if samples.is_empty() {
        return Err(Error::Empty("posterior ensemble"));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("neighbor count m must be >= 1".into()));
    }
    let sites = data.locations();
    if grid.dim() != sites.dim() || grid.metric() != sites.metric() {
        return Err(Error::DimensionMismatch { expected: sites.dim(), found: grid.dim() });
    }
    model.check_locations(grid)?;
    for row in samples {
        if row.len() != data.len() {
            return Err(Error::DimensionMismatch { expected: data.len(), found: row.len() });
        }
    }
    let metric = sites.metric();
    let search_sites = model.search_locations(sites);
    let search_grid = model.search_locations(grid);
    let tree = KdTree::new(&search_sites);
    let (grid_coords, gdim) = search_grid.embedded();
    let k = m.min(data.len());
    let prior = model.variance();
    let out = (0..grid.len())
        .into_par_iter()
        .map(|g| -> Result<(f64, f64)> {
            let hits = tree.nearest_embedded(&grid_coords[g * gdim..(g + 1) * gdim], k);
            let idx: Vec<usize> = hits.iter().map(|h| h.index).collect();
            let kdd = nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
                model.value(sites.point(idx[r]), sites.point(idx[c]), metric, idx[r] == idx[c])
            });
            let kgd: Vec<f64> =
                idx.iter().map(|&j| model.value(grid.point(g), sites.point(j), metric, false)).collect();
            let chol = cholesky(&kdd, JitterPolicy::default())?;
            let l = chol.factor();
            let mut half = kgd.clone();
            forward_solve(l, &mut half);
            let var = (prior - half.iter().map(|v| v * v).sum::<f64>()).max(0.0);
            let mut w = half;
            backward_solve_transpose(l, &mut w);
            let means: Vec<f64> =
                samples.iter().map(|row| idx.iter().zip(&w).map(|(&j, wj)| wj * row[j]).sum()).collect();
            let s = means.len() as f64;
            let mean = means.iter().sum::<f64>() / s;
            let spread = means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / s;
            Ok((mean, (var + spread).sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, sd) = out.into_iter().unzip();
    Ok(KrigingPrediction { mean, sd })
}
