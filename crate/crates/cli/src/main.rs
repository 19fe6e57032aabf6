use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use snn_cli::config::{ConfigFile, NeighborPolicyName, OrderingName, Scenario, Settings};
use snn_cli::error::CliResult;
use snn_cli::experiments::{run_censored_data, run_censored_sim, run_fidelity, run_sample, run_scaling, RunStatus};

#[derive(Parser)]
#[command(name = "snn", version, about = "Sequential nearest-neighbor sampling of truncated multivariate normals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Censored field on a grid, scored against the truth and a Gibbs benchmark.
    Fidelity(CommonArgs),
    /// Wall time of precompute and sampling over a ladder of sizes.
    Scaling(CommonArgs),
    /// Larger simulated censored field with a block benchmark.
    CensoredSim(CommonArgs),
    /// Posterior sampling for censored data read from CSV.
    CensoredData(CommonArgs),
    /// Truncated normal sampling from an explicit covariance (JSON input).
    Sample(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long, value_enum)]
    ordering: Option<OrderingName>,
    #[arg(long, value_enum)]
    neighbor_policy: Option<NeighborPolicyName>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Input file (CSV for censored-data, JSON for sample).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Full-size grid for censored-sim.
    #[arg(long)]
    full: bool,
}

impl CommonArgs {
    fn settings(&self, scenario: Scenario) -> CliResult<Settings> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            seed: self.seed,
            m: self.m,
            n_samples: self.n_samples,
            ordering: self.ordering,
            neighbor_policy: self.neighbor_policy,
            threads: self.threads,
            out_dir: self.out_dir.clone(),
            input: self.input.clone(),
            full: self.full.then_some(true),
            ..ConfigFile::default()
        };
        Settings::resolve(scenario, &file.overlay(&flags))
    }
}

/// Runs the subcommand and returns its status with the summary lines to print.
fn run(cli: Cli) -> CliResult<(RunStatus, Vec<String>)> {
    let mut lines = Vec::new();
    let (scenario, args) = match &cli.command {
        Command::Fidelity(a) => (Scenario::Fidelity, a),
        Command::Scaling(a) => (Scenario::Scaling, a),
        Command::CensoredSim(a) => (Scenario::CensoredSim, a),
        Command::CensoredData(a) => (Scenario::CensoredData, a),
        Command::Sample(a) => (Scenario::Sample, a),
    };
    let settings = args.settings(scenario)?;
    let status = match scenario {
        Scenario::Fidelity => {
            let r = run_fidelity(&settings)?;
            for s in &r.scores {
                lines.push(format!("{:<6} rmse {:.4}  crps {:.4}  ({} sites)", s.method, s.rmse, s.crps, s.n_eval));
            }
            for c in &r.comparisons {
                lines.push(format!(
                    "{:<6} ks {:.4} (p {:.3})  max qq deviation {:.4}",
                    c.method, c.ks_statistic, c.ks_p_value, c.max_qq_deviation_central
                ));
            }
            r.status
        }
        Scenario::Scaling => {
            let r = run_scaling(&settings)?;
            for row in &r.rows {
                lines.push(format!("n {:>7}  precompute {:.3}s  sample {:.3}s", row.n, row.t_precompute, row.t_sample));
            }
            if let Some(s) = r.slope {
                lines.push(format!("log-log slope {s:.3}"));
            }
            RunStatus::Completed
        }
        Scenario::CensoredSim => {
            let r = run_censored_sim(&settings)?;
            for s in &r.scores {
                lines.push(format!(
                    "{:<6} {:<6} rmse {:.4}  crps {:.4}  ({} sites)",
                    s.method, s.region, s.rmse, s.crps, s.n_eval
                ));
            }
            r.status
        }
        Scenario::CensoredData => run_censored_data(&settings)?,
        Scenario::Sample => run_sample(&settings)?,
    };
    if status == RunStatus::NothingToSample {
        lines.push("nothing to sample: no censored sites".into());
    }
    lines.push(format!("outputs written to {}", settings.out_dir.display()));
    Ok((status, lines))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok((_, lines)) => {
            // A closed stdout (e.g. piped into `head`) is not an error.
            let mut out = std::io::stdout().lock();
            for l in lines {
                if writeln!(out, "{l}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
