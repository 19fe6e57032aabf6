//! Wall-time scaling of precompute and sampling over a ladder of grid sizes.

use std::time::Instant;

use serde::Serialize;
use snn_tmvn::kernel::LocationSet;
use snn_tmvn::snn::{precompute, sample, TruncationProblem};

use super::with_threads;
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::output::{f, OutDir};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub t_precompute: f64,
    pub t_sample: f64,
}

impl ScalingRow {
    pub fn total(&self) -> f64 {
        self.t_precompute + self.t_sample
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares slope of log total time on log n; `None` with fewer
    /// than two distinct sizes.
    pub slope: Option<f64>,
}

/// Timings go to `timing.csv`; the sampled values are summarized in
/// `digest.csv`, which is deterministic and independent of the thread count.
pub fn run_scaling(settings: &Settings) -> CliResult<ScalingReport> {
    let mut out = OutDir::create(&settings.out_dir)?;
    let model = settings.model()?;
    let options = settings.snn_options(settings.ordering.into());
    let upper_bound = settings.threshold.value();
    let mut rows = Vec::new();
    let mut digest = out.csv("digest.csv", &["n", "sample", "mean", "sd", "min", "max"])?;
    for &n in &settings.ladder {
        let cols = (n as f64).sqrt().ceil() as usize;
        let locations = LocationSet::grid(cols, n, settings.spacing);
        let problem =
            TruncationProblem::from_kernel(model.clone(), locations, vec![f64::NEG_INFINITY; n], vec![upper_bound; n])?;
        let (row, ens) = with_threads(settings.threads, || -> CliResult<_> {
            let t = Instant::now();
            let plan = precompute(&problem, &options, settings.seed)?;
            let t_precompute = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let ens = sample(&plan, settings.n_samples, settings.seed)?;
            let t_sample = t.elapsed().as_secs_f64();
            Ok((ScalingRow { n, t_precompute, t_sample }, ens))
        })??;
        for (k, s) in ens.samples.iter().enumerate() {
            let mean = s.iter().sum::<f64>() / n as f64;
            let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let min = s.iter().copied().fold(f64::INFINITY, f64::min);
            let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            digest.write_record([n.to_string(), k.to_string(), f(mean), f(var.sqrt()), f(min), f(max)])?;
        }
        rows.push(row);
    }
    digest.flush().map_err(|e| CliError::io("digest.csv", e))?;

    let mut w = out.csv("timing.csv", &["n", "t_precompute", "t_sample", "t_total"])?;
    for r in &rows {
        w.write_record([r.n.to_string(), f(r.t_precompute), f(r.t_sample), f(r.total())])?;
    }
    w.flush().map_err(|e| CliError::io("timing.csv", e))?;

    let slope = loglog_slope(&rows);
    let mut notes = vec![format!("threads: {}", settings.threads)];
    if let Some(s) = slope {
        notes.push(format!("log-log slope of total time: {s:.4}"));
    }
    out.write_manifest(settings, "completed", &notes)?;
    Ok(ScalingReport { rows, slope })
}

fn loglog_slope(rows: &[ScalingRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.total().max(1e-12).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
