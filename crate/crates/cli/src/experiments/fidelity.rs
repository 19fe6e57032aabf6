//! Fidelity experiment: posterior sampling of a censored Gaussian process
//! on a grid, scored against the simulated truth and compared with a Gibbs
//! chain on the exact conditional distribution.

use serde::Serialize;
use snn_tmvn::censored::{build_censored_problem, gibbs_benchmark, sample_censored_posterior, CensoredDataset};
use snn_tmvn::field::simulate_field;
use snn_tmvn::geometry::OrderingKind;
use snn_tmvn::io::write_dataset;
use snn_tmvn::kernel::LocationSet;
use snn_tmvn::lowdim::SamplerStats;

use super::{
    compare_pooled, method_score, nothing_to_sample, stats_note, with_threads, write_comparisons, write_qq,
    write_scores, MethodScore, RunStatus,
};
use crate::config::Settings;
use crate::error::CliResult;
use crate::output::{f, write_samples, OutDir};

/// Pooled distributional comparison of one method with the benchmark.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub method: String,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Over quantile levels 0.01..0.99.
    pub max_qq_deviation_central: f64,
    /// Over all paired order statistics.
    pub max_qq_deviation_full: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FidelityReport {
    pub status: RunStatus,
    pub n_observed: usize,
    pub n_censored: usize,
    pub scores: Vec<MethodScore>,
    pub comparisons: Vec<Comparison>,
    pub stats: Vec<(String, SamplerStats)>,
}

impl FidelityReport {
    pub fn score(&self, method: &str) -> Option<&MethodScore> {
        self.scores.iter().find(|s| s.method == method)
    }

    pub fn comparison(&self, method: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.method == method)
    }
}

pub fn run_fidelity(settings: &Settings) -> CliResult<FidelityReport> {
    let mut out = OutDir::create(&settings.out_dir)?;
    let model = settings.model()?;
    let locations = LocationSet::unit_grid(settings.grid_side);
    let field = out.timed("simulate", || simulate_field(&model, &locations, settings.seed))?;
    let data = CensoredDataset::censor_below(locations, &field, settings.threshold.value())?;
    let observed = data.observed_indices();
    let censored = data.censored_indices();
    let mut report = FidelityReport {
        status: RunStatus::Completed,
        n_observed: observed.len(),
        n_censored: censored.len(),
        scores: Vec::new(),
        comparisons: Vec::new(),
        stats: Vec::new(),
    };
    write_dataset(out.record_file("data.csv"), &data)?;
    let mut w = out.csv("truth.csv", &["site", "value"])?;
    for (i, v) in field.iter().enumerate() {
        w.write_record([i.to_string(), f(*v)])?;
    }
    drop(w);
    if censored.is_empty() {
        report.status = RunStatus::NothingToSample;
        nothing_to_sample(&out, settings)?;
        return Ok(report);
    }
    let truth: Vec<f64> = censored.iter().map(|&i| field[i]).collect();

    let mut methods: Vec<(&str, OrderingKind)> = vec![("snn", settings.ordering.into())];
    if settings.msnn {
        methods.push(("msnn", OrderingKind::Maximin));
    }
    let mut pooled = Vec::new();
    for (name, kind) in methods {
        let options = settings.snn_options(kind);
        let ens = out.timed(&format!("{name}_total"), || {
            with_threads(settings.threads, || -> CliResult<_> {
                let plan = build_censored_problem(&data, &model, &options, settings.seed)?;
                Ok(sample_censored_posterior(&plan, settings.n_samples, settings.seed, false)?)
            })
        })??;
        report.scores.push(method_score(name, "censored", &ens.samples, &truth)?);
        report.stats.push((name.to_string(), ens.total_stats()));
        let mut w = out.csv(&format!("samples_{name}.csv"), &["sample", "site", "value"])?;
        write_samples(&mut w, &ens.samples, &censored)?;
        pooled.push((name, ens.samples.concat()));
    }

    let bench = out.timed("gibbs_total", || {
        gibbs_benchmark(
            &data,
            &model,
            &censored,
            &observed,
            settings.benchmark_burnin,
            settings.benchmark_thin,
            settings.n_samples,
            settings.seed,
        )
    })?;
    report.scores.push(method_score("gibbs", "censored", &bench, &truth)?);
    let mut w = out.csv("samples_gibbs.csv", &["sample", "site", "value"])?;
    write_samples(&mut w, &bench, &censored)?;
    let bench_pooled = bench.concat();

    for (name, p) in &pooled {
        report.comparisons.push(compare_pooled(name, p, &bench_pooled));
    }
    write_scores(&mut out, "scores.csv", &report.scores)?;
    let refs: Vec<(&str, &[f64])> = pooled.iter().map(|(n, p)| (*n, p.as_slice())).collect();
    write_qq(&mut out, &refs, &bench_pooled)?;
    write_comparisons(&mut out, &report.comparisons)?;
    let mut notes = vec![format!("{} observed and {} censored sites", observed.len(), censored.len())];
    notes.extend(report.stats.iter().map(|(name, st)| stats_note(name, st)));
    out.write_manifest(settings, "completed", &notes)?;
    Ok(report)
}
