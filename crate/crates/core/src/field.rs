//! Exact simulation of Gaussian process realizations.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gaussian::{JitterPolicy, PackedLower};
use crate::kernel::{CovarianceModel, LocationSet};
use crate::rng::{substream, Domain};

/// One zero-mean realization of the process at `locations`, drawn as
/// `L z` with `L` the full Cholesky factor. Cubic in the number of
/// locations; intended for simulation studies up to about 10^4 sites.
pub fn simulate_field(model: &CovarianceModel, locations: &LocationSet, seed: u64) -> Result<Vec<f64>> {
    model.check_locations(locations)?;
    let n = locations.len();
    if n == 0 {
        return Err(Error::Empty("location set"));
    }
    let metric = locations.metric();
    let build = || PackedLower::from_fn(n, |i, j| model.value(locations.point(i), locations.point(j), metric, i == j));
    let policy = JitterPolicy::default();
    let scale = model.variance() + model.nugget();
    let mut jitter = 0.0;
    let mut factor = build();
    let mut attempt = 0;
    while let Err(e) = factor.factor_in_place(jitter) {
        if attempt >= policy.max_retries {
            return Err(e);
        }
        jitter = if jitter == 0.0 { policy.initial_scale * scale } else { jitter * policy.growth };
        attempt += 1;
        factor = build();
    }
    let mut rng = substream(seed, Domain::Field, 0);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(factor.lower_mul(&z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Metric, Smoothness};

    #[test]
    fn empirical_covariance_matches_kernel() {
        let pts = vec![vec![0.0], vec![0.05], vec![0.3]];
        let locs = LocationSet::new(&pts, Metric::Euclidean).unwrap();
        let model = CovarianceModel::isotropic(1.5, 0.1, Smoothness::ThreeHalves, 0.0).unwrap();
        let reps = 20_000;
        let mut acc = [[0.0; 3]; 3];
        for s in 0..reps {
            let f = simulate_field(&model, &locs, s).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += f[i] * f[j] / reps as f64;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                let k = model.value(&pts[i], &pts[j], Metric::Euclidean, i == j);
                let se = ((1.5f64 * 1.5 + k * k) / reps as f64).sqrt();
                assert!((acc[i][j] - k).abs() < 4.0 * se, "({i},{j}) {} vs {k}", acc[i][j]);
            }
        }
    }

    #[test]
    fn seeded() {
        let locs = LocationSet::grid(5, 25, 0.05);
        let model = CovarianceModel::isotropic(1.0, 0.1, Smoothness::FiveHalves, 0.0).unwrap();
        assert_eq!(simulate_field(&model, &locs, 3).unwrap(), simulate_field(&model, &locs, 3).unwrap());
        assert_ne!(simulate_field(&model, &locs, 3).unwrap(), simulate_field(&model, &locs, 4).unwrap());
    }
}
