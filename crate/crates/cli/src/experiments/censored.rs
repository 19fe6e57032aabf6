//! Posterior sampling for partially censored fields: a simulated study
//! with a block benchmark, and user-supplied data with optional kriging.

use snn_tmvn::censored::{
    build_censored_problem, gibbs_benchmark, krige_predict, sample_censored_posterior, CensoredDataset, SiteStatus,
};
use snn_tmvn::field::simulate_field;
use snn_tmvn::geometry::OrderingKind;
use snn_tmvn::io::{read_dataset, write_dataset};
use snn_tmvn::kernel::LocationSet;
use snn_tmvn::lowdim::SamplerStats;

use super::{method_score, nothing_to_sample, sorted, stats_note, with_threads, write_scores, MethodScore, RunStatus};
use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::output::{f, write_samples, OutDir};
use snn_tmvn::eval::quantile_sorted;

#[derive(Clone, Debug, PartialEq)]
pub struct CensoredSimReport {
    pub status: RunStatus,
    pub n_observed: usize,
    pub n_censored: usize,
    /// Censored sites inside the benchmark block.
    pub block_censored: usize,
    pub scores: Vec<MethodScore>,
    pub stats: Vec<(String, SamplerStats)>,
}

impl CensoredSimReport {
    pub fn score(&self, method: &str, region: &str) -> Option<&MethodScore> {
        self.scores.iter().find(|s| s.method == method && s.region == region)
    }
}

/// Indices of the central `block x block` sub-grid of a `side x side` grid.
fn central_block(side: usize, block: usize) -> Vec<usize> {
    let b = block.min(side);
    let start = (side - b) / 2;
    (start..start + b).flat_map(|r| (start..start + b).map(move |c| r * side + c)).collect()
}

pub fn run_censored_sim(settings: &Settings) -> CliResult<CensoredSimReport> {
    let mut out = OutDir::create(&settings.out_dir)?;
    let model = settings.model()?;
    let side = settings.grid_side;
    let locations = LocationSet::unit_grid(side);
    let field = out.timed("simulate", || simulate_field(&model, &locations, settings.seed))?;
    let data = CensoredDataset::censor_below(locations, &field, settings.threshold.value())?;
    let observed = data.observed_indices();
    let censored = data.censored_indices();
    let block = central_block(side, settings.benchmark_block);
    let block_censored: Vec<usize> =
        block.iter().copied().filter(|&i| data.status()[i] == SiteStatus::Censored).collect();
    let block_observed: Vec<usize> =
        block.iter().copied().filter(|&i| data.status()[i] == SiteStatus::Observed).collect();
    let mut report = CensoredSimReport {
        status: RunStatus::Completed,
        n_observed: observed.len(),
        n_censored: censored.len(),
        block_censored: block_censored.len(),
        scores: Vec::new(),
        stats: Vec::new(),
    };
    write_dataset(out.record_file("data.csv"), &data)?;
    if censored.is_empty() {
        report.status = RunStatus::NothingToSample;
        nothing_to_sample(&out, settings)?;
        return Ok(report);
    }
    let truth_all: Vec<f64> = censored.iter().map(|&i| field[i]).collect();
    let truth_block: Vec<f64> = block_censored.iter().map(|&i| field[i]).collect();

    let mut methods: Vec<(&str, OrderingKind)> = vec![("snn", settings.ordering.into())];
    if settings.msnn {
        methods.push(("msnn", OrderingKind::Maximin));
    }
    for (name, kind) in methods {
        let options = settings.snn_options(kind);
        let ens = out.timed(&format!("{name}_total"), || {
            with_threads(settings.threads, || -> CliResult<_> {
                let plan = build_censored_problem(&data, &model, &options, settings.seed)?;
                Ok(sample_censored_posterior(&plan, settings.n_samples, settings.seed, true)?)
            })
        })??;
        let pick = |sites: &[usize]| -> Vec<Vec<f64>> {
            ens.samples.iter().map(|row| sites.iter().map(|&i| row[i]).collect()).collect()
        };
        let rows_all = pick(&censored);
        report.scores.push(method_score(name, "all", &rows_all, &truth_all)?);
        if !block_censored.is_empty() {
            report.scores.push(method_score(name, "block", &pick(&block_censored), &truth_block)?);
        }
        report.stats.push((name.to_string(), ens.total_stats()));
        let mut w = out.csv(&format!("samples_{name}.csv"), &["sample", "site", "value"])?;
        write_samples(&mut w, &rows_all, &censored)?;
    }

    let mut notes = vec![format!(
        "{} observed and {} censored sites; benchmark block of {} sites with {} censored",
        observed.len(),
        censored.len(),
        block.len(),
        block_censored.len()
    )];
    if block_censored.is_empty() {
        notes.push("benchmark skipped: no censored sites in the block".into());
    } else {
        let bench = out.timed("gibbs_block", || {
            gibbs_benchmark(
                &data,
                &model,
                &block_censored,
                &block_observed,
                settings.benchmark_burnin,
                settings.benchmark_thin,
                settings.n_samples,
                settings.seed,
            )
        })?;
        report.scores.push(method_score("gibbs", "block", &bench, &truth_block)?);
        let mut w = out.csv("samples_gibbs_block.csv", &["sample", "site", "value"])?;
        write_samples(&mut w, &bench, &block_censored)?;
    }
    write_scores(&mut out, "scores.csv", &report.scores)?;
    notes.extend(report.stats.iter().map(|(name, st)| stats_note(name, st)));
    out.write_manifest(settings, "completed", &notes)?;
    Ok(report)
}

/// Samples the latent field at the censored sites of a CSV dataset. With
/// `predict_grid = g`, also krige onto a `g x g` grid spanning the
/// bounding box of 2-D locations.
pub fn run_censored_data(settings: &Settings) -> CliResult<RunStatus> {
    let mut out = OutDir::create(&settings.out_dir)?;
    let model = settings.model()?;
    let input = settings.input.as_ref().ok_or_else(|| CliError::Config("missing input file".into()))?;
    let data = read_dataset(input, settings.metric())?;
    let censored = data.censored_indices();
    if censored.is_empty() {
        nothing_to_sample(&out, settings)?;
        return Ok(RunStatus::NothingToSample);
    }
    let options = settings.snn_options(settings.ordering.into());
    let ens = out.timed("sample_total", || {
        with_threads(settings.threads, || -> CliResult<_> {
            let plan = build_censored_problem(&data, &model, &options, settings.seed)?;
            Ok(sample_censored_posterior(&plan, settings.n_samples, settings.seed, true)?)
        })
    })??;
    let rows: Vec<Vec<f64>> = ens.samples.iter().map(|r| censored.iter().map(|&i| r[i]).collect()).collect();
    let mut w = out.csv("samples.csv", &["sample", "site", "value"])?;
    write_samples(&mut w, &rows, &censored)?;

    let mut w = out.csv("summary.csv", &["site", "mean", "sd", "q05", "q50", "q95"])?;
    for (j, &site) in censored.iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let k = col.len() as f64;
        let mean = col.iter().sum::<f64>() / k;
        let var = if col.len() > 1 { col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        let s = sorted(&col);
        w.write_record([
            site.to_string(),
            f(mean),
            f(var.sqrt()),
            f(quantile_sorted(&s, 0.05)),
            f(quantile_sorted(&s, 0.5)),
            f(quantile_sorted(&s, 0.95)),
        ])?;
    }
    w.flush().map_err(|e| CliError::io("summary.csv", e))?;

    let mut notes = vec![format!("{} sites, {} censored", data.len(), censored.len())];
    if let Some(g) = settings.predict_grid {
        let grid = bounding_grid(data.locations(), g)?;
        let pred = out.timed("kriging", || {
            with_threads(settings.threads, || krige_predict(&data, &ens.samples, &model, &grid, settings.m))
        })??;
        let mut w = out.csv("predictions.csv", &["coord_1", "coord_2", "mean", "sd"])?;
        for (p, (m, s)) in grid.points().zip(pred.mean.iter().zip(&pred.sd)) {
            w.write_record([f(p[0]), f(p[1]), f(*m), f(*s)])?;
        }
        w.flush().map_err(|e| CliError::io("predictions.csv", e))?;
        notes.push(format!("kriging onto a {g} x {g} grid"));
    }
    out.write_manifest(settings, "completed", &notes)?;
    Ok(RunStatus::Completed)
}

fn bounding_grid(sites: &LocationSet, g: usize) -> CliResult<LocationSet> {
    if sites.dim() != 2 {
        return Err(CliError::Config("predict_grid needs 2-D locations".into()));
    }
    if g < 1 {
        return Err(CliError::Config("predict_grid must be >= 1".into()));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in sites.points() {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let at = |d: usize, k: usize| if g > 1 { lo[d] + (hi[d] - lo[d]) * k as f64 / (g - 1) as f64 } else { lo[d] };
    let points: Vec<Vec<f64>> = (0..g * g).map(|i| vec![at(0, i / g), at(1, i % g)]).collect();
    Ok(LocationSet::new(&points, sites.metric())?)
}
