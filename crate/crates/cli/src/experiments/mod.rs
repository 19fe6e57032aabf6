//! The experiment subcommands.

mod censored;
mod fidelity;
mod sample;
mod scaling;

pub use censored::{run_censored_data, run_censored_sim, CensoredSimReport};
pub use fidelity::{run_fidelity, Comparison, FidelityReport};
pub use sample::{run_sample, SampleInput};
pub use scaling::{run_scaling, ScalingReport, ScalingRow};

use serde::Serialize;
use snn_tmvn::eval::{ks_statistic, max_quantile_deviation, qq_data, quantile_sorted, score};

use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::output::{f, OutDir};

/// Whether a run produced results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    NothingToSample,
}

/// Scores of one method over one set of sites.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodScore {
    pub method: String,
    pub region: String,
    pub rmse: f64,
    pub crps: f64,
    pub n_eval: usize,
}

/// Runs `f` on a pool with `threads` workers (0 = rayon's default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Scores rows whose entries follow `truth` position by position.
pub(crate) fn method_score(method: &str, region: &str, rows: &[Vec<f64>], truth: &[f64]) -> CliResult<MethodScore> {
    let idx: Vec<usize> = (0..truth.len()).collect();
    let r = score(rows, truth, &idx, false)?;
    Ok(MethodScore { method: method.into(), region: region.into(), rmse: r.rmse, crps: r.crps, n_eval: r.n_eval })
}

pub(crate) fn write_scores(out: &mut OutDir, name: &str, scores: &[MethodScore]) -> CliResult<()> {
    let mut w = out.csv(name, &["method", "region", "rmse", "crps", "n_eval"])?;
    for s in scores {
        w.write_record([s.method.clone(), s.region.clone(), f(s.rmse), f(s.crps), s.n_eval.to_string()])?;
    }
    w.flush().map_err(|e| CliError::io(name, e))
}

/// Quantile levels 0.01, 0.02, ..., 0.99.
pub(crate) fn central_levels() -> Vec<f64> {
    (1..100).map(|k| k as f64 / 100.0).collect()
}

/// Distributional comparison of pooled draws against the benchmark.
pub(crate) fn compare_pooled(method: &str, pooled: &[f64], benchmark: &[f64]) -> Comparison {
    let ks = ks_statistic(pooled, benchmark);
    Comparison {
        method: method.into(),
        ks_statistic: ks.statistic,
        ks_p_value: ks.p_value,
        max_qq_deviation_central: max_quantile_deviation(pooled, benchmark, &central_levels()),
        max_qq_deviation_full: qq_data(&sorted(pooled), &sorted(benchmark))
            .iter()
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
    }
}

pub(crate) fn stats_note(method: &str, s: &snn_tmvn::lowdim::SamplerStats) -> String {
    format!(
        "{method}: {} low-dimensional draws ({} univariate), acceptance rate {:.4}, {} Gibbs fallbacks, {} tilt failures",
        s.calls,
        s.univariate,
        s.acceptance_rate().unwrap_or(1.0),
        s.fallbacks,
        s.tilt_failures
    )
}

pub(crate) fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub(crate) fn write_qq(out: &mut OutDir, methods: &[(&str, &[f64])], benchmark: &[f64]) -> CliResult<()> {
    let mut w = out.csv("qq.csv", &["method", "level", "benchmark_quantile", "method_quantile"])?;
    let b = sorted(benchmark);
    for (name, pooled) in methods {
        let a = sorted(pooled);
        for p in central_levels() {
            w.write_record([name.to_string(), f(p), f(quantile_sorted(&b, p)), f(quantile_sorted(&a, p))])?;
        }
    }
    w.flush().map_err(|e| CliError::io("qq.csv", e))
}

pub(crate) fn write_comparisons(out: &mut OutDir, rows: &[Comparison]) -> CliResult<()> {
    let mut w = out.csv(
        "comparison.csv",
        &["method", "ks_statistic", "ks_p_value", "max_qq_deviation_central", "max_qq_deviation_full"],
    )?;
    for c in rows {
        w.write_record([
            c.method.clone(),
            f(c.ks_statistic),
            f(c.ks_p_value),
            f(c.max_qq_deviation_central),
            f(c.max_qq_deviation_full),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("comparison.csv", e))
}

pub(crate) fn nothing_to_sample(out: &OutDir, settings: &Settings) -> CliResult<()> {
    out.write_manifest(settings, "nothing-to-sample", &["no censored sites; nothing to sample".into()])
}
