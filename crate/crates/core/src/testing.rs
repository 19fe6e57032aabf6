//! Random problem generators shared by the test suites.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// `L L^T` for a random lower-triangular `L` with diagonal in [0.5, 1.5].
pub fn random_spd<R: Rng + ?Sized>(q: usize, rng: &mut R) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(q, q);
    for i in 0..q {
        for j in 0..i {
            l[(i, j)] = 0.6 * rng.sample::<f64, _>(StandardNormal);
        }
        l[(i, i)] = rng.random_range(0.5..1.5);
    }
    &l * l.transpose()
}

/// Bounds with a mix of one-sided, two-sided and absent constraints,
/// scaled by the marginal standard deviations.
pub fn random_bounds<R: Rng + ?Sized>(cov: &DMatrix<f64>, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let q = cov.nrows();
    let mut lower = vec![f64::NEG_INFINITY; q];
    let mut upper = vec![f64::INFINITY; q];
    for j in 0..q {
        let sd = cov[(j, j)].sqrt();
        match rng.random_range(0..4) {
            0 => lower[j] = sd * rng.random_range(-1.0..0.8),
            1 => upper[j] = sd * rng.random_range(-0.8..1.0),
            2 => {
                lower[j] = sd * rng.random_range(-1.5..0.5);
                upper[j] = lower[j] + sd * rng.random_range(0.6..2.0);
            }
            _ => {}
        }
    }
    (lower, upper)
}

/// Monte Carlo estimate of `P(lower <= X <= upper)` for `X ~ N(0, cov)`.
pub fn box_probability<R: Rng + ?Sized>(
    cov: &DMatrix<f64>,
    lower: &[f64],
    upper: &[f64],
    draws: usize,
    rng: &mut R,
) -> f64 {
    let l = cov.clone().cholesky().expect("positive definite").unpack();
    let q = cov.nrows();
    let mut hits = 0;
    let mut eps = vec![0.0; q];
    for _ in 0..draws {
        for e in &mut eps {
            *e = rng.sample(StandardNormal);
        }
        let inside = (0..q).all(|i| {
            let x: f64 = (0..=i).map(|j| l[(i, j)] * eps[j]).sum();
            x >= lower[i] && x <= upper[i]
        });
        hits += usize::from(inside);
    }
    hits as f64 / draws as f64
}
