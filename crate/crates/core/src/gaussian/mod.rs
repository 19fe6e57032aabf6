//! Dense Gaussian primitives: Cholesky with jitter, conditional factors,
//! normal distribution functions and univariate truncated sampling.

mod cholesky;
mod conditional;
mod normal;
mod truncated;

pub(crate) use cholesky::lower_mul_vec;
pub use cholesky::{
    backward_solve_transpose, cholesky, forward_solve, forward_solve_matrix, precision_from_factor, relative_frobenius,
    Cholesky, JitterPolicy, PackedLower,
};
pub use conditional::{conditional_factors, conditional_from_blocks, ConditionalFactor};
pub use normal::{
    ln_normal_interval, ln_std_normal_sf, std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf,
};
pub(crate) use truncated::{open_unit, standard_truncated};
pub use truncated::{sample_truncated_univariate, truncated_moments, TAIL_THRESHOLD};
