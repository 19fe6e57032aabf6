//! Scores and distributional comparisons for sample ensembles.

use crate::error::{Error, Result};

/// RMSE and mean CRPS over a set of evaluated coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreReport {
    pub rmse: f64,
    pub crps: f64,
    pub n_eval: usize,
    /// Per-coordinate (squared error of the ensemble mean, CRPS).
    pub per_coordinate: Option<(Vec<f64>, Vec<f64>)>,
}

/// Root mean squared error of the ensemble mean. `samples` holds one row
/// per draw, in the same coordinate indexing as `truth`.
pub fn rmse(samples: &[Vec<f64>], truth: &[f64], eval_indices: &[usize]) -> Result<f64> {
    Ok(score(samples, truth, eval_indices, false)?.rmse)
}

/// Empirical CRPS of the ensemble `xs` for the outcome `y`:
/// `mean|x - y| - mean|x - x'| / 2`, in O(M log M).
pub fn crps_ensemble(xs: &[f64], y: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    let m = xs.len() as f64;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let abs_err = sorted.iter().map(|x| (x - y).abs()).sum::<f64>() / m;
    // sum_{k,j} |x_k - x_j| = 2 sum_i (2i - M - 1) x_(i), i from 1
    let spread: f64 = sorted.iter().enumerate().map(|(i, x)| (2.0 * (i as f64 + 1.0) - m - 1.0) * x).sum::<f64>();
    Ok((abs_err - spread / (m * m)).max(0.0))
}

/// RMSE of the ensemble mean and mean CRPS over `eval_indices`.
pub fn score(
    samples: &[Vec<f64>],
    truth: &[f64],
    eval_indices: &[usize],
    keep_per_coordinate: bool,
) -> Result<ScoreReport> {
    if eval_indices.is_empty() {
        return Err(Error::Empty("evaluation index set"));
    }
    if samples.is_empty() {
        return Err(Error::Empty("ensemble"));
    }
    for row in samples {
        if row.len() != truth.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), found: row.len() });
        }
    }
    let mut sq = Vec::with_capacity(eval_indices.len());
    let mut cr = Vec::with_capacity(eval_indices.len());
    let mut column = vec![0.0; samples.len()];
    for &j in eval_indices {
        if j >= truth.len() {
            return Err(Error::IndexOutOfRange { index: j, len: truth.len() });
        }
        for (c, row) in column.iter_mut().zip(samples) {
            *c = row[j];
        }
        let mean = column.iter().sum::<f64>() / column.len() as f64;
        sq.push((mean - truth[j]).powi(2));
        cr.push(crps_ensemble(&column, truth[j])?);
    }
    let n = eval_indices.len() as f64;
    Ok(ScoreReport {
        rmse: (sq.iter().sum::<f64>() / n).sqrt(),
        crps: cr.iter().sum::<f64>() / n,
        n_eval: eval_indices.len(),
        per_coordinate: keep_per_coordinate.then_some((sq, cr)),
    })
}

/// Linear-interpolation quantile of sorted data at probability `p`
/// (the `(n - 1) p` positioning rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Paired quantiles of two sorted samples, one pair per point of the
/// shorter sample, the longer one interpolated at matching probabilities.
pub fn qq_data(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let len = a.len().min(b.len());
    (0..len)
        .map(|i| {
            let p = if len == 1 { 0.5 } else { i as f64 / (len - 1) as f64 };
            (quantile_sorted(a, p), quantile_sorted(b, p))
        })
        .collect()
}

/// Largest absolute quantile difference over the given probabilities.
pub fn max_quantile_deviation(a: &[f64], b: &[f64], probs: &[f64]) -> f64 {
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    probs.iter().map(|&p| (quantile_sorted(&sa, p) - quantile_sorted(&sb, p)).abs()).fold(0.0, f64::max)
}

/// Sample mean and variance with standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_var: f64,
}

impl MomentSummary {
    /// Whether both moments agree with `other` within `k` combined
    /// standard errors.
    pub fn agrees_with(&self, other: &MomentSummary, k: f64) -> bool {
        let dm = (self.mean - other.mean).abs();
        let dv = (self.var - other.var).abs();
        dm <= k * self.se_mean.hypot(other.se_mean) && dv <= k * self.se_var.hypot(other.se_var)
    }
}

/// Moments of `xs` with batch-means standard errors over `batches`
/// contiguous batches (use 1 for independent draws), so autocorrelated
/// chains get honest errors.
pub fn moment_summary(xs: &[f64], batches: usize) -> MomentSummary {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let dev2: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = dev2.iter().sum::<f64>() / (n - 1.0);
    let se = |v: &[f64]| -> f64 {
        let b = batches.max(1);
        if b == 1 {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let s2 = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0);
            return (s2 / v.len() as f64).sqrt();
        }
        let size = v.len() / b;
        let bm: Vec<f64> = (0..b).map(|i| v[i * size..(i + 1) * size].iter().sum::<f64>() / size as f64).collect();
        let m = bm.iter().sum::<f64>() / b as f64;
        let s2 = bm.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (b as f64 - 1.0);
        (s2 / b as f64).sqrt()
    };
    MomentSummary { mean, var, se_mean: se(xs), se_var: se(&dev2) }
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_statistic(a: &[f64], b: &[f64]) -> KsTest {
    if a.is_empty() || b.is_empty() {
        return KsTest { statistic: 0.0, p_value: 1.0 };
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsTest { statistic: d, p_value: kolmogorov_sf(lambda) }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Domain};
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn rmse_examples() {
        let truth = [0.0, 0.0];
        assert_eq!(rmse(&[vec![0.0, 0.0]], &truth, &[0, 1]).unwrap(), 0.0);
        assert_eq!(rmse(&[vec![1.0, 0.0]], &truth, &[0]).unwrap(), 1.0);
        let r = rmse(&[vec![3.0, 4.0]], &truth, &[0, 1]).unwrap();
        assert!((r - 5.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[vec![1.0, 0.0]], &truth, &[]).is_err());
    }

    #[test]
    fn crps_examples() {
        assert_eq!(crps_ensemble(&[1.5, 1.5, 1.5], 1.5).unwrap(), 0.0);
        assert!((crps_ensemble(&[0.0, 2.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((crps_ensemble(&[0.3], -1.2).unwrap() - 1.5).abs() < 1e-15);
        assert!(crps_ensemble(&[], 0.0).is_err());
    }

    #[test]
    fn crps_matches_double_sum() {
        let mut rng = substream(1, Domain::Benchmark, 0);
        for m in [1, 2, 7, 50] {
            let xs: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y = 0.37;
            let mf = m as f64;
            let a = xs.iter().map(|x: &f64| (x - y).abs()).sum::<f64>() / mf;
            let b: f64 = xs.iter().flat_map(|x| xs.iter().map(move |z| (x - z).abs())).sum::<f64>() / (2.0 * mf * mf);
            assert!((crps_ensemble(&xs, y).unwrap() - (a - b)).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_equals_mean_of_per_coordinate() {
        let mut rng = substream(2, Domain::Benchmark, 0);
        let samples: Vec<Vec<f64>> =
            (0..30).map(|_| (0..8).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let truth: Vec<f64> = (0..8).map(|j| j as f64 * 0.1).collect();
        let idx: Vec<usize> = (0..8).collect();
        let rep = score(&samples, &truth, &idx, true).unwrap();
        let (sq, cr) = rep.per_coordinate.clone().unwrap();
        assert!((rep.crps - cr.iter().sum::<f64>() / 8.0).abs() < 1e-12);
        assert!((rep.rmse - (sq.iter().sum::<f64>() / 8.0).sqrt()).abs() < 1e-12);
        let max_err =
            (0..8).map(|j| samples.iter().map(|r| (r[j] - truth[j]).abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        assert!(rep.crps >= 0.0 && rep.crps <= max_err);
    }

    #[test]
    fn qq_examples() {
        let a = [0.0, 1.0, 2.0, 3.0];
        assert!(qq_data(&a, &a).iter().all(|(x, y)| x == y));
        let b: Vec<f64> = a.iter().map(|x| x + 1.0).collect();
        assert!(qq_data(&b, &a).iter().all(|(x, y)| (x - (y + 1.0)).abs() < 1e-15));
        let long: Vec<f64> = (0..=8).map(|i| i as f64 * 0.375).collect();
        let pairs = qq_data(&a, &long);
        assert_eq!(pairs.len(), 4);
        assert!(pairs.iter().all(|(x, y)| (x - y).abs() < 1e-12));
    }

    #[test]
    fn ks_examples() {
        let a = [0.1, 0.5, 0.9];
        assert_eq!(ks_statistic(&a, &a).statistic, 0.0);
        assert_eq!(ks_statistic(&[0.0, 1.0], &[2.0, 3.0]).statistic, 1.0);
        assert_eq!(ks_statistic(&[0.0, 1.0, 2.0, 3.0], &[0.5, 1.5]).statistic, 0.5);
    }

    #[test]
    fn ks_calibration() {
        let mut rejects = 0;
        for rep in 0..100 {
            let mut rng = substream(3, Domain::Benchmark, rep);
            let a: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
            if ks_statistic(&a, &b).p_value < 0.01 {
                rejects += 1;
            }
        }
        // nominal 1 in 100; 5 or more has probability below 0.004
        assert!(rejects <= 4, "{rejects} rejections");
    }

    #[test]
    fn ks_detects_a_shift() {
        let mut rng = substream(4, Domain::Benchmark, 0);
        let a: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.3).collect();
        assert!(ks_statistic(&a, &b).p_value < 1e-6);
    }
}
