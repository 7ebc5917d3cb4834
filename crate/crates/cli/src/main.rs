use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use symrl::harness::{self, ExperimentConfig, Metric};

#[derive(Parser)]
#[command(name = "symrl", version, about = "Symmetry-regularized DQN experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key = value config file.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set episodes=50`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two experiment output directories with Welch's t-test.
    Summarize {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// mean_total_reward, max_total_reward or convergence_episode.
        #[arg(long, default_value = "mean_total_reward")]
        metric: String,
        /// Also write the summary as CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the built-in oracle and invariant checks.
    Check,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, overrides, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::parse(&text, &overrides)?;
            if out.is_some() {
                cfg.output_dir = out;
            }
            let records = harness::run_experiment(&cfg)?;
            for r in &records {
                let s = harness::RunSummary::of(r, &cfg);
                println!(
                    "run {:>3} seed {:>6}  mean reward {:>9.3}  max {:>8.1}  convergence {}",
                    s.run,
                    s.seed,
                    s.mean_total_reward.unwrap_or(f64::NAN),
                    s.max_total_reward.unwrap_or(f64::NAN),
                    r.convergence_episode.map_or("-".to_string(), |e| e.to_string()),
                );
            }
            if let Some(dir) = &cfg.output_dir {
                println!("wrote {}", dir.display());
            }
            Ok(true)
        }
        Command::Summarize { dir_a, dir_b, metric, csv } => {
            let metric: Metric = metric.parse()?;
            let summary = harness::summarize_dirs(&dir_a, &dir_b, metric)?;
            print!("{}", summary.table());
            if let Some(path) = csv {
                let text = format!("{}\n{}\n", harness::SummaryStats::csv_header(), summary.csv_row());
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(true)
        }
        Command::Check => {
            let mut all = true;
            for c in harness::run_checks() {
                println!("{} {:<32} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                all &= c.passed;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("symrl: {e:#}");
            ExitCode::FAILURE
        }
    }
}
