use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Diagonal jitter escalation for near-singular matrices.
///
/// The first attempt uses no jitter. Each retry adds `scale * tr(A) / dim`
/// to the diagonal, with `scale` starting at `initial_scale` and growing by
/// `growth`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JitterPolicy {
    pub initial_scale: f64,
    pub growth: f64,
    pub max_retries: u32,
}

impl JitterPolicy {
    pub fn none() -> Self {
        Self { initial_scale: 0.0, growth: 1.0, max_retries: 0 }
    }
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { initial_scale: 1e-10, growth: 10.0, max_retries: 3 }
    }
}

/// Lower Cholesky factor together with the jitter that was needed.
#[derive(Clone, Debug)]
pub struct Cholesky {
    factor: DMatrix<f64>,
    jitter: f64,
}

impl Cholesky {
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn into_factor(self) -> DMatrix<f64> {
        self.factor
    }

    /// Diagonal jitter added before factorization; zero if none was needed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn jittered(&self) -> bool {
        self.jitter > 0.0
    }
}

/// Factors a symmetric matrix as `L L^T`, escalating diagonal jitter on
/// failure according to `policy`. Only the lower triangle is read.
pub fn cholesky(a: &DMatrix<f64>, policy: JitterPolicy) -> Result<Cholesky> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix to factor"));
    }
    let mean_diag = if n > 0 { a.trace() / n as f64 } else { 0.0 };
    let mut jitter = 0.0;
    let mut scale = policy.initial_scale;
    for attempt in 0..=policy.max_retries {
        if attempt > 0 {
            jitter = scale * mean_diag;
            scale *= policy.growth;
        }
        if let Some(factor) = factor_lower(a, jitter) {
            return Ok(Cholesky { factor, jitter });
        }
    }
    Err(Error::NotPositiveDefinite { dim: n, jitter })
}

/// Plain Cholesky of `a + jitter I`; `None` when a pivot is not positive.
fn factor_lower(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    // Column i of `u` holds row i of L so the inner products are contiguous.
    let mut u = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            if i == j {
                s += jitter;
            }
            let dot: f64 = {
                let ci = u.column(i);
                let cj = u.column(j);
                ci.rows(0, j).dot(&cj.rows(0, j))
            };
            s -= dot;
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                u[(i, i)] = s.sqrt();
            } else {
                u[(j, i)] = s / u[(j, j)];
            }
        }
    }
    Some(u.transpose())
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub fn forward_solve(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `L^T x = b` in place for lower-triangular `L`.
pub fn backward_solve_transpose(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `L X = B` column by column.
pub fn forward_solve_matrix(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = b.clone();
    for mut col in out.column_iter_mut() {
        forward_solve(l, col.as_mut_slice());
    }
    out
}

/// `(L L^T)^{-1}` via triangular solves, used for Gibbs full conditionals.
pub fn precision_from_factor(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut inv = DMatrix::<f64>::identity(n, n);
    for mut col in inv.column_iter_mut() {
        let s = col.as_mut_slice();
        forward_solve(l, s);
        backward_solve_transpose(l, s);
    }
    // symmetrize rounding
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = v;
            inv[(j, i)] = v;
        }
    }
    inv
}

/// Packed lower-triangular storage (row `i` holds `i + 1` entries) for
/// factoring covariance matrices too large for a full square buffer.
pub struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

impl PackedLower {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let start = i * (i + 1) / 2;
        &self.data[start..start + i + 1]
    }

    /// In-place Cholesky; on success the storage holds `L`.
    pub fn factor_in_place(&mut self, jitter: f64) -> Result<()> {
        for i in 0..self.n {
            let start_i = i * (i + 1) / 2;
            for j in 0..=i {
                let start_j = j * (j + 1) / 2;
                let dot: f64 = self.data[start_i..start_i + j]
                    .iter()
                    .zip(&self.data[start_j..start_j + j])
                    .map(|(a, b)| a * b)
                    .sum();
                let mut s = self.data[start_i + j] - dot;
                if i == j {
                    s += jitter;
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { dim: self.n, jitter });
                    }
                    self.data[start_i + i] = s.sqrt();
                } else {
                    self.data[start_i + j] = s / self.data[start_j + j];
                }
            }
        }
        Ok(())
    }

    /// `L z` for a factored matrix.
    pub fn lower_mul(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(z).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Frobenius norm of `a - b` relative to `b`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom == 0.0 {
        diff
    } else {
        diff / denom
    }
}

pub(crate) fn lower_mul_vec(l: &DMatrix<f64>, z: &[f64]) -> DVector<f64> {
    let n = l.nrows();
    DVector::from_fn(n, |i, _| (0..=i).map(|k| l[(i, k)] * z[k]).sum())
}
