//! Plain truncated-normal sampling from an explicit covariance matrix.

use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;
use snn_tmvn::kernel::LocationSet;
use snn_tmvn::snn::{precompute, sample, TruncationProblem};

use super::{sorted, with_threads, RunStatus};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::output::{f, write_samples, OutDir};
use snn_tmvn::eval::quantile_sorted;

/// JSON input of the `sample` subcommand. `null` bounds mean unbounded;
/// without `locations`, index `i` is placed at `x = i` for neighbor search.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleInput {
    pub covariance: Vec<Vec<f64>>,
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
    #[serde(default)]
    pub locations: Option<Vec<Vec<f64>>>,
}

impl SampleInput {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn into_problem(self, settings: &Settings) -> CliResult<TruncationProblem> {
        let n = self.covariance.len();
        if let Some(r) = self.covariance.iter().position(|row| row.len() != n) {
            return Err(CliError::Config(format!(
                "covariance row {r} has {} entries, expected {n}",
                self.covariance[r].len()
            )));
        }
        let matrix = DMatrix::from_fn(n, n, |r, c| self.covariance[r][c]);
        let lower = self.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
        let upper = self.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        let locations = match self.locations {
            Some(p) => Some(LocationSet::new(&p, settings.metric())?),
            None => None,
        };
        Ok(TruncationProblem::from_dense(matrix, locations, lower, upper)?)
    }
}

pub fn run_sample(settings: &Settings) -> CliResult<RunStatus> {
    let mut out = OutDir::create(&settings.out_dir)?;
    let input = settings.input.as_ref().ok_or_else(|| CliError::Config("missing input file".into()))?;
    let problem = SampleInput::load(input)?.into_problem(settings)?;
    let options = settings.snn_options(settings.ordering.into());
    let ens = out.timed("sample_total", || {
        with_threads(settings.threads, || -> CliResult<_> {
            let plan = precompute(&problem, &options, settings.seed)?;
            Ok(sample(&plan, settings.n_samples, settings.seed)?)
        })
    })??;
    let sites: Vec<usize> = (0..problem.len()).collect();
    let mut w = out.csv("samples.csv", &["sample", "site", "value"])?;
    write_samples(&mut w, &ens.samples, &sites)?;
    let mut w = out.csv("summary.csv", &["site", "mean", "sd", "q05", "q50", "q95"])?;
    for j in sites {
        let col = ens.column(j);
        let k = col.len() as f64;
        let mean = col.iter().sum::<f64>() / k;
        let var = if col.len() > 1 { col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        let s = sorted(&col);
        w.write_record([
            j.to_string(),
            f(mean),
            f(var.sqrt()),
            f(quantile_sorted(&s, 0.05)),
            f(quantile_sorted(&s, 0.5)),
            f(quantile_sorted(&s, 0.95)),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("summary.csv", e))?;
    let stats = ens.total_stats();
    let notes = vec![format!(
        "low-dimensional sampler: {} calls, {} fallbacks, acceptance {:.4}",
        stats.calls,
        stats.fallbacks,
        stats.acceptance_rate().unwrap_or(1.0)
    )];
    out.write_manifest(settings, "completed", &notes)?;
    Ok(RunStatus::Completed)
}
