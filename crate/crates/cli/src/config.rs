//! Experiment configuration: a flat JSON object whose keys can also be set
//! by command-line flags. Unset keys take scenario-specific defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use snn_tmvn::geometry::OrderingKind;
use snn_tmvn::kernel::{CovarianceModel, Metric, Smoothness};
use snn_tmvn::snn::{NeighborRule, SnnOptions};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Fidelity,
    Scaling,
    CensoredSim,
    CensoredData,
    Sample,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fidelity => "fidelity",
            Scenario::Scaling => "scaling",
            Scenario::CensoredSim => "censored-sim",
            Scenario::CensoredData => "censored-data",
            Scenario::Sample => "sample",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingName {
    Coordinate,
    Random,
    Maximin,
}

impl From<OrderingName> for OrderingKind {
    fn from(o: OrderingName) -> Self {
        match o {
            OrderingName::Coordinate => OrderingKind::Coordinate,
            OrderingName::Random => OrderingKind::Random,
            OrderingName::Maximin => OrderingKind::Maximin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborPolicyName {
    All,
    SplitObsCens,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricName {
    Euclidean,
    Chordal,
}

/// A real number that may also be written as `"inf"` or `"-inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Text(Infinite),
}

/// Infinity spelled out in JSON.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Infinite {
    #[serde(rename = "inf", alias = "+inf", alias = "Infinity")]
    Inf,
    #[serde(rename = "-inf", alias = "-Infinity")]
    NegInf,
}

impl Real {
    pub fn value(self) -> f64 {
        match self {
            Real::Number(v) => v,
            Real::Text(Infinite::Inf) => f64::INFINITY,
            Real::Text(Infinite::NegInf) => f64::NEG_INFINITY,
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v == f64::INFINITY {
            Real::Text(Infinite::Inf)
        } else if v == f64::NEG_INFINITY {
            Real::Text(Infinite::NegInf)
        } else {
            Real::Number(v)
        }
    }
}

/// One range for all dimensions or one per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ranges {
    Isotropic(f64),
    PerDimension(Vec<f64>),
}

/// Every key optional; the file and the command line each produce one and
/// the command line wins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<Scenario>,
    pub variance: Option<f64>,
    pub range: Option<Ranges>,
    pub smoothness: Option<f64>,
    pub nugget: Option<f64>,
    pub metric: Option<MetricName>,
    pub grid_side: Option<usize>,
    pub spacing: Option<f64>,
    pub threshold: Option<Real>,
    pub m: Option<usize>,
    pub n_samples: Option<usize>,
    pub ordering: Option<OrderingName>,
    pub neighbor_policy: Option<NeighborPolicyName>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub ladder: Option<Vec<usize>>,
    pub msnn: Option<bool>,
    pub benchmark_burnin: Option<usize>,
    pub benchmark_thin: Option<usize>,
    pub benchmark_block: Option<usize>,
    pub predict_grid: Option<usize>,
    pub full: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &ConfigFile) -> Self {
        overlay!(
            self,
            top,
            scenario,
            variance,
            range,
            smoothness,
            nugget,
            metric,
            grid_side,
            spacing,
            threshold,
            m,
            n_samples,
            ordering,
            neighbor_policy,
            seed,
            threads,
            out_dir,
            input,
            ladder,
            msnn,
            benchmark_burnin,
            benchmark_thin,
            benchmark_block,
            predict_grid,
            full
        );
        self
    }
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub scenario: Scenario,
    pub variance: f64,
    pub range: Ranges,
    pub smoothness: f64,
    pub nugget: f64,
    pub metric: MetricName,
    pub grid_side: usize,
    pub spacing: f64,
    pub threshold: Real,
    pub m: usize,
    pub n_samples: usize,
    pub ordering: OrderingName,
    pub neighbor_policy: NeighborPolicyName,
    pub seed: u64,
    pub threads: usize,
    pub out_dir: PathBuf,
    pub input: Option<PathBuf>,
    pub ladder: Vec<usize>,
    pub msnn: bool,
    pub benchmark_burnin: usize,
    pub benchmark_thin: usize,
    pub benchmark_block: usize,
    pub predict_grid: Option<usize>,
    pub full: bool,
}

impl Settings {
    /// Fills unset keys with the defaults of `scenario` and validates.
    pub fn resolve(scenario: Scenario, cfg: &ConfigFile) -> CliResult<Self> {
        if let Some(s) = cfg.scenario {
            if s != scenario {
                return Err(CliError::Config(format!(
                    "config file is for scenario {:?} but the {} subcommand was run",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        let full = cfg.full.unwrap_or(false);
        let (range, nugget, side, threshold, n_samples, ordering, msnn) = match scenario {
            Scenario::Fidelity => (0.1, 0.0, 20, 1.0, 50, OrderingName::Coordinate, true),
            Scenario::Scaling => (0.03, 0.0, 0, 0.0, 10, OrderingName::Coordinate, false),
            Scenario::CensoredSim => (0.03, 1e-4, if full { 100 } else { 50 }, 1.0, 50, OrderingName::Coordinate, true),
            Scenario::CensoredData | Scenario::Sample => (0.1, 0.0, 0, 1.0, 50, OrderingName::Random, false),
        };
        // The Gibbs benchmark mixes slowly on smooth fields; these lengths
        // were chosen so that longer chains no longer move the benchmark scores.
        let (burnin, thin) = match scenario {
            Scenario::Fidelity => (300_000, 6_000),
            _ => (50_000, 1_000),
        };
        let s = Settings {
            scenario,
            variance: cfg.variance.unwrap_or(1.0),
            range: cfg.range.clone().unwrap_or(Ranges::Isotropic(range)),
            smoothness: cfg.smoothness.unwrap_or(1.5),
            nugget: cfg.nugget.unwrap_or(nugget),
            metric: cfg.metric.unwrap_or(MetricName::Euclidean),
            grid_side: cfg.grid_side.unwrap_or(side),
            spacing: cfg.spacing.unwrap_or(0.02),
            threshold: cfg.threshold.unwrap_or(Real::Number(threshold)),
            m: cfg.m.unwrap_or(30),
            n_samples: cfg.n_samples.unwrap_or(n_samples),
            ordering: cfg.ordering.unwrap_or(ordering),
            neighbor_policy: cfg.neighbor_policy.unwrap_or(NeighborPolicyName::All),
            seed: cfg.seed.unwrap_or(1),
            threads: cfg.threads.unwrap_or(if scenario == Scenario::Scaling { 1 } else { 0 }),
            out_dir: cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(format!("out/{}", scenario.name()))),
            input: cfg.input.clone(),
            ladder: cfg.ladder.clone().unwrap_or_else(|| vec![400, 1600, 6400, 25600]),
            msnn: cfg.msnn.unwrap_or(msnn),
            benchmark_burnin: cfg.benchmark_burnin.unwrap_or(burnin),
            benchmark_thin: cfg.benchmark_thin.unwrap_or(thin),
            benchmark_block: cfg.benchmark_block.unwrap_or(20),
            predict_grid: cfg.predict_grid,
            full,
        };
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.m < 1 {
            return bad("m must be >= 1".into());
        }
        if self.n_samples < 1 {
            return bad("n_samples must be >= 1".into());
        }
        if self.threshold.value().is_nan() {
            return bad("threshold must be a number".into());
        }
        if self.benchmark_thin < 1 {
            return bad("benchmark_thin must be >= 1".into());
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return bad("spacing must be positive".into());
        }
        self.model()?;
        match self.scenario {
            Scenario::Fidelity | Scenario::CensoredSim if self.grid_side < 1 => bad("grid_side must be >= 1".into()),
            Scenario::Scaling if self.ladder.is_empty() => bad("ladder must not be empty".into()),
            Scenario::Scaling if self.ladder.contains(&0) => bad("ladder sizes must be >= 1".into()),
            Scenario::CensoredData | Scenario::Sample => match &self.input {
                None => bad(format!("the {} scenario needs an input file", self.scenario.name())),
                Some(p) if !p.exists() => bad(format!("input file {} does not exist", p.display())),
                Some(_) => Ok(()),
            },
            _ => Ok(()),
        }
    }

    pub fn model(&self) -> CliResult<CovarianceModel> {
        let nu = Smoothness::from_value(self.smoothness).map_err(|e| CliError::Config(e.to_string()))?;
        let ranges = match &self.range {
            Ranges::Isotropic(r) => vec![*r],
            Ranges::PerDimension(r) => r.clone(),
        };
        CovarianceModel::new(self.variance, ranges, nu, self.nugget).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn metric(&self) -> Metric {
        match self.metric {
            MetricName::Euclidean => Metric::Euclidean,
            MetricName::Chordal => Metric::Chordal,
        }
    }

    pub fn snn_options(&self, ordering: OrderingKind) -> SnnOptions {
        SnnOptions {
            m: self.m,
            ordering,
            neighbors: match self.neighbor_policy {
                NeighborPolicyName::All => NeighborRule::All,
                NeighborPolicyName::SplitObsCens => NeighborRule::SplitFixed,
            },
            ..SnnOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: ConfigFile = serde_json::from_str(r#"{"m": 12, "seed": 5, "threshold": "-inf"}"#).unwrap();
        let flags = ConfigFile { m: Some(20), ..Default::default() };
        let s = Settings::resolve(Scenario::Fidelity, &file.overlay(&flags)).unwrap();
        assert_eq!(s.m, 20);
        assert_eq!(s.seed, 5);
        assert_eq!(s.threshold.value(), f64::NEG_INFINITY);
        assert_eq!(s.grid_side, 20);
    }

    #[test]
    fn scenario_defaults() {
        let s = Settings::resolve(Scenario::CensoredSim, &ConfigFile::default()).unwrap();
        assert_eq!((s.grid_side, s.nugget), (50, 1e-4));
        let full = ConfigFile { full: Some(true), ..Default::default() };
        assert_eq!(Settings::resolve(Scenario::CensoredSim, &full).unwrap().grid_side, 100);
        let s = Settings::resolve(Scenario::Scaling, &ConfigFile::default()).unwrap();
        assert_eq!(s.threads, 1);
        assert_eq!(s.ladder, vec![400, 1600, 6400, 25600]);
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for json in
            [r#"{"m": 0}"#, r#"{"n_samples": 0}"#, r#"{"smoothness": 1.0}"#, r#"{"variance": -1}"#, r#"{"ladder": []}"#]
        {
            let cfg: ConfigFile = serde_json::from_str(json).unwrap();
            let scenario = if json.contains("ladder") { Scenario::Scaling } else { Scenario::Fidelity };
            let err = Settings::resolve(scenario, &cfg).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{json}");
        }
        assert!(serde_json::from_str::<ConfigFile>(r#"{"unknown_key": 1}"#).is_err());
        let wrong = ConfigFile { scenario: Some(Scenario::Scaling), ..Default::default() };
        assert!(Settings::resolve(Scenario::Fidelity, &wrong).is_err());
        assert!(Settings::resolve(Scenario::Sample, &ConfigFile::default()).is_err());
    }
}
