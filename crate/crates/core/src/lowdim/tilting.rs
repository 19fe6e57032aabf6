//! Exponentially tilted separation-of-variables proposal.
//!
//! With `Sigma = L L^T` (after a reordering that puts the most severely
//! truncated coordinates first) and `D = diag(L)`, write `X = L Z` and
//! scale each constraint row by `D_k`. The proposal draws `Z_k` in order
//! from a unit-variance normal with mean `tilt_k`, truncated so that row `k`
//! of `X` satisfies its bounds. The log ratio of target to proposal is
//!
//! ```text
//! psi(Z; tilt) = sum_k ln P(lt_k <= N(0,1) <= ut_k) + tilt_k^2 / 2 - tilt_k Z_k
//! ```
//!
//! and the tilt is chosen at the saddle point of `psi`, where
//! `max_Z psi(Z; tilt)` is smallest. That maximum is the accept-reject
//! bound.

use nalgebra::DMatrix;
use rand::Rng;

use crate::gaussian::{ln_normal_interval, standard_truncated};

use super::LowDimTarget;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const NEWTON_TOLERANCE: f64 = 1e-10;

/// Proposal for one low-dimensional target, ready to draw from.
#[derive(Clone, Debug)]
pub struct TiltedProposal {
    /// Original coordinate at each proposal position.
    perm: Vec<usize>,
    /// Cholesky factor of the reordered covariance.
    chol: DMatrix<f64>,
    /// `chol` with rows scaled to unit diagonal, diagonal removed.
    unit: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Scaled bounds in proposal order.
    lower_scaled: Vec<f64>,
    upper_scaled: Vec<f64>,
    tilt: Vec<f64>,
    saddle: Vec<f64>,
    log_bound: f64,
    tilted: bool,
}

impl TiltedProposal {
    /// Plain separation-of-variables proposal: zero tilt, no reordering.
    pub fn plain(target: &LowDimTarget<'_>) -> Self {
        let q = target.dim();
        Self::assemble(target, (0..q).collect(), target.chol().clone(), None)
    }

    /// Reorders (optionally) and optimizes the tilt with up to
    /// `max_newton_iter` Newton steps. Falls back to zero tilt when the
    /// iteration does not converge.
    pub fn optimized(target: &LowDimTarget<'_>, reorder: bool, max_newton_iter: usize) -> Self {
        let q = target.dim();
        let (perm, chol) = if reorder { reorder_cholesky(target) } else { ((0..q).collect(), target.chol().clone()) };
        Self::assemble(target, perm, chol, Some(max_newton_iter))
    }

    fn assemble(target: &LowDimTarget<'_>, perm: Vec<usize>, chol: DMatrix<f64>, newton: Option<usize>) -> Self {
        let q = perm.len();
        let diag: Vec<f64> = (0..q).map(|k| chol[(k, k)]).collect();
        let unit = DMatrix::from_fn(q, q, |r, c| if c < r { chol[(r, c)] / diag[r] } else { 0.0 });
        let lower_scaled: Vec<f64> = (0..q).map(|k| target.lower()[perm[k]] / diag[k]).collect();
        let upper_scaled: Vec<f64> = (0..q).map(|k| target.upper()[perm[k]] / diag[k]).collect();
        let mut p = Self {
            perm,
            chol,
            unit,
            lower: target.lower().to_vec(),
            upper: target.upper().to_vec(),
            lower_scaled,
            upper_scaled,
            tilt: vec![0.0; q],
            saddle: vec![0.0; q],
            log_bound: 0.0,
            tilted: false,
        };
        if let Some(iters) = newton.filter(|_| q >= 2) {
            if let Some((x, mu)) = p.solve_saddle(iters) {
                let bound = p.psi(&x, &mu);
                if bound.is_finite() {
                    p.saddle = x;
                    p.tilt = mu;
                    p.log_bound = bound;
                    p.tilted = true;
                    return p;
                }
            }
        }
        // Zero tilt: every factor after the first is a probability, so the
        // first one bounds the log ratio.
        p.log_bound = ln_normal_interval(p.lower_scaled[0], p.upper_scaled[0]);
        p
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Whether a saddle-point tilt is in use (false for the zero-tilt fallback).
    pub fn is_tilted(&self) -> bool {
        self.tilted
    }

    pub fn tilt(&self) -> &[f64] {
        &self.tilt
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Upper bound on `psi` used in the acceptance test.
    pub fn log_bound(&self) -> f64 {
        self.log_bound
    }

    /// `psi(x; tilt)`; `x` and `tilt` have `dim()` entries, the last of
    /// each treated as zero.
    pub fn psi(&self, x: &[f64], tilt: &[f64]) -> f64 {
        let q = self.dim();
        let mut total = 0.0;
        for k in 0..q {
            let (xk, mk) = if k + 1 < q { (x[k], tilt[k]) } else { (0.0, 0.0) };
            let c: f64 = (0..k).map(|j| self.unit[(k, j)] * if j + 1 < q { x[j] } else { 0.0 }).sum();
            let lt = self.lower_scaled[k] - mk - c;
            let ut = self.upper_scaled[k] - mk - c;
            total += ln_normal_interval(lt, ut) + 0.5 * mk * mk - xk * mk;
        }
        total
    }

    /// Draws a proposal in the scaled space; returns `psi` at the draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64]) -> f64 {
        let q = self.dim();
        let mut log_ratio = 0.0;
        for k in 0..q {
            let col: f64 = (0..k).map(|j| self.unit[(k, j)] * z[j]).sum();
            let mk = self.tilt[k];
            let tl = self.lower_scaled[k] - mk - col;
            let tu = self.upper_scaled[k] - mk - col;
            z[k] = mk + standard_truncated(tl, tu, rng);
            log_ratio += ln_normal_interval(tl, tu) + 0.5 * mk * mk - mk * z[k];
        }
        log_ratio
    }

    /// Maps a scaled-space draw back to the target's coordinates.
    pub fn to_target(&self, z: &[f64]) -> Vec<f64> {
        let q = self.dim();
        let mut out = vec![0.0; q];
        for k in 0..q {
            let x: f64 = (0..=k).map(|j| self.chol[(k, j)] * z[j]).sum();
            let orig = self.perm[k];
            out[orig] = x.clamp(self.lower[orig], self.upper[orig]);
        }
        out
    }

    /// The saddle point mapped into target coordinates; a central feasible
    /// starting state for the Gibbs fallback.
    pub fn mode(&self) -> Vec<f64> {
        let mut z = self.saddle.clone();
        let q = self.dim();
        // complete the last coordinate with the centre of its interval
        let col: f64 = (0..q - 1).map(|j| self.unit[(q - 1, j)] * z[j]).sum();
        let (lt, ut) = (self.lower_scaled[q - 1] - col, self.upper_scaled[q - 1] - col);
        z[q - 1] = if lt.is_finite() && ut.is_finite() {
            0.5 * (lt + ut)
        } else if lt.is_finite() {
            lt.max(0.0)
        } else if ut.is_finite() {
            ut.min(0.0)
        } else {
            0.0
        };
        self.to_target(&z)
    }

    /// Gradient of `psi` in `y = (x[..q-1], tilt[..q-1])` and, optionally,
    /// its Jacobian.
    fn gradient(&self, y: &[f64], want_jacobian: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
        let q = self.dim();
        let d = q - 1;
        let x = |j: usize| if j < d { y[j] } else { 0.0 };
        let mu = |j: usize| if j < d { y[d + j] } else { 0.0 };
        let mut p = vec![0.0; q];
        let mut dp = vec![0.0; q];
        for k in 0..q {
            let c: f64 = (0..k).map(|j| self.unit[(k, j)] * x(j)).sum();
            let lt = self.lower_scaled[k] - mu(k) - c;
            let ut = self.upper_scaled[k] - mu(k) - c;
            let w = ln_normal_interval(lt, ut);
            let pl = (-0.5 * lt * lt - w).exp() / SQRT_2PI;
            let pu = (-0.5 * ut * ut - w).exp() / SQRT_2PI;
            p[k] = pl - pu;
            let ltp = if lt.is_finite() { lt * pl } else { 0.0 };
            let utp = if ut.is_finite() { ut * pu } else { 0.0 };
            dp[k] = -p[k] * p[k] + ltp - utp;
        }
        let mut grad = vec![0.0; 2 * d];
        for j in 0..d {
            let lp: f64 = (j + 1..q).map(|k| self.unit[(k, j)] * p[k]).sum();
            grad[j] = lp - mu(j);
            grad[d + j] = mu(j) - x(j) + p[j];
        }
        if !want_jacobian {
            return (grad, None);
        }
        let mut jac = DMatrix::zeros(2 * d, 2 * d);
        for a in 0..d {
            for b in 0..d {
                // sum_k L_ka dP_k L_kb
                let start = a.max(b) + 1;
                let xx: f64 = (start..q).map(|k| self.unit[(k, a)] * dp[k] * self.unit[(k, b)]).sum();
                jac[(a, b)] = xx;
                // d grad_x[a] / d mu[b] = dP_b L_ba - delta_ab
                let mx = dp[b] * self.unit[(b, a)] - if a == b { 1.0 } else { 0.0 };
                jac[(a, d + b)] = mx;
                jac[(d + b, a)] = mx;
            }
            jac[(d + a, d + a)] = 1.0 + dp[a];
        }
        (grad, Some(jac))
    }

    /// Damped Newton iteration for the saddle point of `psi`.
    fn solve_saddle(&self, max_iter: usize) -> Option<(Vec<f64>, Vec<f64>)> {
        let q = self.dim();
        let d = q - 1;
        let mut y = vec![0.0; 2 * d];
        let norm2 = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>();
        let (mut grad, mut jac) = self.gradient(&y, true);
        let mut err = norm2(&grad);
        for _ in 0..max_iter {
            if !err.is_finite() {
                return None;
            }
            if err < NEWTON_TOLERANCE {
                let mut x = y[..d].to_vec();
                let mut mu = y[d..].to_vec();
                x.push(0.0);
                mu.push(0.0);
                return Some((x, mu));
            }
            let rhs = nalgebra::DVector::from_iterator(2 * d, grad.iter().map(|g| -g));
            let step = jac.take()?.lu().solve(&rhs)?;
            let mut t = 1.0;
            loop {
                let cand: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
                let (g, _) = self.gradient(&cand, false);
                let e = norm2(&g);
                if (e.is_finite() && e < err) || t < 1e-4 {
                    y = cand;
                    break;
                }
                t *= 0.5;
            }
            let (g, j) = self.gradient(&y, true);
            grad = g;
            jac = j;
            err = norm2(&grad);
        }
        if err < NEWTON_TOLERANCE {
            let mut x = y[..d].to_vec();
            let mut mu = y[d..].to_vec();
            x.push(0.0);
            mu.push(0.0);
            return Some((x, mu));
        }
        None
    }
}

/// Cholesky factorization with greedy variable reordering: at each step
/// the remaining coordinate with the smallest conditional interval
/// probability (given the expected values of those already placed) goes
/// next.
pub(crate) fn reorder_cholesky(target: &LowDimTarget<'_>) -> (Vec<usize>, DMatrix<f64>) {
    let q = target.dim();
    let mut sigma = target.covariance().clone_owned();
    let mut lower = target.lower().to_vec();
    let mut upper = target.upper().to_vec();
    let mut perm: Vec<usize> = (0..q).collect();
    let mut l = DMatrix::<f64>::zeros(q, q);
    let mut z = vec![0.0; q];
    for j in 0..q {
        let mut best = j;
        let mut best_p = f64::INFINITY;
        for i in j..q {
            let lz: f64 = (0..j).map(|k| l[(i, k)] * z[k]).sum();
            let s2 = sigma[(i, i)] - (0..j).map(|k| l[(i, k)] * l[(i, k)]).sum::<f64>();
            let s = s2.max(f64::EPSILON).sqrt();
            let pr = ln_normal_interval((lower[i] - lz) / s, (upper[i] - lz) / s);
            if pr < best_p {
                best_p = pr;
                best = i;
            }
        }
        if best != j {
            sigma.swap_rows(j, best);
            sigma.swap_columns(j, best);
            l.swap_rows(j, best);
            lower.swap(j, best);
            upper.swap(j, best);
            perm.swap(j, best);
        }
        let s2 = sigma[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        let ljj = s2.max(f64::EPSILON).sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..q {
            let dot: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            l[(i, j)] = (sigma[(i, j)] - dot) / ljj;
        }
        let lz: f64 = (0..j).map(|k| l[(j, k)] * z[k]).sum();
        let tl = (lower[j] - lz) / ljj;
        let tu = (upper[j] - lz) / ljj;
        let w = ln_normal_interval(tl, tu);
        let el = if tl.is_finite() { (-0.5 * tl * tl - w).exp() } else { 0.0 };
        let eu = if tu.is_finite() { (-0.5 * tu * tu - w).exp() } else { 0.0 };
        z[j] = (el - eu) / SQRT_2PI;
    }
    (perm, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{cholesky, relative_frobenius, std_normal_cdf, JitterPolicy};
    use crate::rng::{substream, Domain};

    fn target(cov: DMatrix<f64>, lower: Vec<f64>, upper: Vec<f64>) -> LowDimTarget<'static> {
        LowDimTarget::from_covariance(lower, upper, cov).unwrap()
    }

    fn equicorrelated(q: usize, rho: f64) -> DMatrix<f64> {
        DMatrix::from_fn(q, q, |i, j| if i == j { 1.0 } else { rho })
    }

    #[test]
    fn zero_tilt_is_plain_sov() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.6, 0.3, 0.6, 1.0, 0.2, 0.3, 0.2, 1.5]);
        let lower = vec![-0.5, f64::NEG_INFINITY, 0.2];
        let upper = vec![1.0, 0.8, f64::INFINITY];
        let t = target(cov.clone(), lower.clone(), upper.clone());
        let p = TiltedProposal::plain(&t);
        assert!(p.tilt().iter().all(|&m| m == 0.0));
        let l = cholesky(&cov, JitterPolicy::none()).unwrap().into_factor();
        let mut rng = substream(1, Domain::Benchmark, 0);
        let mut z = vec![0.0; 3];
        for _ in 0..200 {
            let logw = p.draw(&mut rng, &mut z);
            // SOV weight: prod_k Phi((u_k - sum_{j<k} L_kj z_j)/L_kk) - Phi(lower analogue)
            let mut sov = 0.0;
            for k in 0..3 {
                let c: f64 = (0..k).map(|j| l[(k, j)] * z[j]).sum();
                let a = (lower[k] - c) / l[(k, k)];
                let b = (upper[k] - c) / l[(k, k)];
                sov += (std_normal_cdf(b) - std_normal_cdf(a)).ln();
            }
            assert!((logw - sov).abs() < 1e-10, "{logw} vs {sov}");
            let x = p.to_target(&z);
            for k in 0..3 {
                assert!(x[k] >= lower[k] && x[k] <= upper[k]);
            }
        }
    }

    #[test]
    fn saddle_point_bounds_the_log_ratio() {
        let cov = equicorrelated(5, 0.5);
        let t = target(cov, vec![0.5; 5], vec![f64::INFINITY; 5]);
        let p = TiltedProposal::optimized(&t, true, 50);
        assert!(p.is_tilted());
        let mut rng = substream(2, Domain::Benchmark, 0);
        let mut z = vec![0.0; 5];
        for _ in 0..2000 {
            let logw = p.draw(&mut rng, &mut z);
            assert!(logw <= p.log_bound() + 1e-9);
        }
    }

    #[test]
    fn tilting_raises_acceptance_under_strong_truncation() {
        let cov = equicorrelated(6, 0.3);
        let t = target(cov, vec![1.5; 6], vec![f64::INFINITY; 6]);
        let mut rng = substream(3, Domain::Benchmark, 0);
        let rate = |p: &TiltedProposal, rng: &mut crate::rng::StreamRng| {
            let mut z = vec![0.0; 6];
            let mut acc = 0;
            for _ in 0..4000 {
                let logw = p.draw(rng, &mut z);
                let u: f64 = crate::gaussian::open_unit(rng);
                if -u.ln() > p.log_bound() - logw {
                    acc += 1;
                }
            }
            acc as f64 / 4000.0
        };
        let plain = rate(&TiltedProposal::plain(&t), &mut rng);
        let tilted = rate(&TiltedProposal::optimized(&t, true, 50), &mut rng);
        assert!(tilted > 0.3, "tilted acceptance {tilted}");
        assert!(tilted > 5.0 * plain, "plain {plain} tilted {tilted}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.2, 0.4, 1.2, 0.5, 0.2, 0.5, 0.9]);
        let t = target(cov, vec![0.3, -1.0, 0.1], vec![2.0, f64::INFINITY, 1.5]);
        let p = TiltedProposal::optimized(&t, false, 0);
        let y = vec![0.2, -0.1, 0.3, 0.15];
        let (g, jac) = p.gradient(&y, true);
        let jac = jac.unwrap();
        let f = |y: &[f64]| p.psi(&[y[0], y[1], 0.0], &[y[2], y[3], 0.0]);
        let h = 1e-6;
        for i in 0..4 {
            let mut yp = y.clone();
            let mut ym = y.clone();
            yp[i] += h;
            ym[i] -= h;
            let fd = (f(&yp) - f(&ym)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "grad {i}: {fd} vs {}", g[i]);
            let (gp, _) = p.gradient(&yp, false);
            let (gm, _) = p.gradient(&ym, false);
            for r in 0..4 {
                let fd = (gp[r] - gm[r]) / (2.0 * h);
                assert!((fd - jac[(r, i)]).abs() < 1e-5, "jac ({r},{i}): {fd} vs {}", jac[(r, i)]);
            }
        }
    }

    #[test]
    fn reordered_factor_reproduces_permuted_covariance() {
        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.2, 0.4, 1.2, 0.5, 0.2, 0.5, 0.9]);
        let t = target(cov.clone(), vec![-3.0, 1.0, -0.2], vec![3.0, 4.0, 0.2]);
        let (perm, l) = reorder_cholesky(&t);
        let permuted = DMatrix::from_fn(3, 3, |i, j| cov[(perm[i], perm[j])]);
        assert!(relative_frobenius(&(&l * l.transpose()), &permuted) < 1e-14);
        // the narrowest interval (coordinate 2) or the far-tail one (1) leads
        assert_ne!(perm[0], 0);
    }
}
