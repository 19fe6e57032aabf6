use nalgebra::DMatrix;

use super::cholesky::{cholesky, forward_solve_matrix, Cholesky, JitterPolicy};
use crate::error::Result;
use crate::kernel::Covariance;

/// Regression weights and residual covariance of `z_later | z_prev`.
#[derive(Clone, Debug)]
pub struct ConditionalFactor {
    /// `Sigma[later, prev] Sigma[prev, prev]^{-1}`, `|later| x |prev|`.
    pub weights: DMatrix<f64>,
    /// `Sigma[later, later] - weights Sigma[prev, later]`.
    pub covariance: DMatrix<f64>,
    /// Lower Cholesky factor of `covariance`.
    pub chol: DMatrix<f64>,
    /// Jitter added while factoring either block; zero when none was needed.
    pub jitter: f64,
}

impl ConditionalFactor {
    pub fn later_len(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn prev_len(&self) -> usize {
        self.weights.ncols()
    }
}

/// Conditional factors for the index sets `prev` and `later` of `cov`.
///
/// The weights come from triangular solves against the Cholesky factor of
/// `Sigma[prev, prev]`; no inverse is formed.
pub fn conditional_factors(
    cov: &Covariance,
    prev: &[usize],
    later: &[usize],
    policy: JitterPolicy,
) -> Result<ConditionalFactor> {
    let sigma_ll = cov.block(later, later)?;
    if prev.is_empty() {
        let c = cholesky(&sigma_ll, policy)?;
        return Ok(ConditionalFactor {
            weights: DMatrix::zeros(later.len(), 0),
            jitter: c.jitter(),
            chol: c.into_factor(),
            covariance: sigma_ll,
        });
    }
    let sigma_pp = cov.block(prev, prev)?;
    let sigma_pl = cov.block(prev, later)?;
    conditional_from_blocks(&sigma_pp, &sigma_pl, sigma_ll, policy)
}

/// Same as [`conditional_factors`] for explicit blocks.
pub fn conditional_from_blocks(
    sigma_pp: &DMatrix<f64>,
    sigma_pl: &DMatrix<f64>,
    sigma_ll: DMatrix<f64>,
    policy: JitterPolicy,
) -> Result<ConditionalFactor> {
    let prev_chol: Cholesky = cholesky(sigma_pp, policy)?;
    let lp = prev_chol.factor();
    // w = Lp^{-1} Sigma[prev, later]; weights^T = Lp^{-T} w
    let w = forward_solve_matrix(lp, sigma_pl);
    let mut covariance = sigma_ll - w.transpose() * &w;
    // w^T w is symmetric up to rounding in the product
    for i in 0..covariance.nrows() {
        for j in 0..i {
            let v = 0.5 * (covariance[(i, j)] + covariance[(j, i)]);
            covariance[(i, j)] = v;
            covariance[(j, i)] = v;
        }
    }
    let mut weights_t = w;
    for mut col in weights_t.column_iter_mut() {
        super::cholesky::backward_solve_transpose(lp, col.as_mut_slice());
    }
    let c = cholesky(&covariance, policy)?;
    Ok(ConditionalFactor {
        weights: weights_t.transpose(),
        jitter: prev_chol.jitter().max(c.jitter()),
        chol: c.into_factor(),
        covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::relative_frobenius;
    use crate::rng::{substream, Domain};
    use rand::seq::SliceRandom;
    use rand::Rng;

    fn random_spd<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(n, n) * 0.1
    }

    /// Dense oracle via explicit LU inversion; independent of the
    /// Cholesky route in the implementation.
    fn dense_oracle(s: &DMatrix<f64>, prev: &[usize], later: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
        let pick = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| s[(r[i], c[j])]);
        let spp = pick(prev, prev);
        let slp = pick(later, prev);
        let sll = pick(later, later);
        let inv = spp.lu().try_inverse().unwrap();
        let v = &slp * inv;
        let st = sll - &v * slp.transpose();
        (v, st)
    }

    #[test]
    fn bivariate_textbook_case() {
        let rho = 0.6;
        let s = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let cov = Covariance::dense(s).unwrap();
        let f = conditional_factors(&cov, &[0], &[1], JitterPolicy::default()).unwrap();
        assert!((f.weights[(0, 0)] - rho).abs() < 1e-15);
        assert!((f.covariance[(0, 0)] - (1.0 - rho * rho)).abs() < 1e-15);
        assert!((f.chol[(0, 0)] - (1.0 - rho * rho).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_previous_set() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let cov = Covariance::dense(s.clone()).unwrap();
        let f = conditional_factors(&cov, &[], &[0, 1], JitterPolicy::default()).unwrap();
        assert_eq!(f.weights.shape(), (2, 0));
        assert_eq!(f.covariance, s);
    }

    #[test]
    fn random_splits_match_dense_oracle() {
        let mut rng = substream(11, Domain::Benchmark, 0);
        for _ in 0..500 {
            let n = rng.random_range(2..=10);
            let s = random_spd(n, &mut rng);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let np = rng.random_range(1..n);
            let (prev, later) = idx.split_at(np);
            let cov = Covariance::dense(s.clone()).unwrap();
            let f = conditional_factors(&cov, prev, later, JitterPolicy::default()).unwrap();
            let (v, st) = dense_oracle(&s, prev, later);
            assert!(relative_frobenius(&f.weights, &v) < 1e-8);
            assert!(relative_frobenius(&f.covariance, &st) < 1e-8);
            let rebuilt = &f.chol * f.chol.transpose();
            assert!(relative_frobenius(&rebuilt, &f.covariance) < 1e-8);
        }
    }
}
