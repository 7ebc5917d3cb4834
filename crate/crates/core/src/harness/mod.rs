//! Experiment configuration, seeded multi-run execution, convergence
//! detection, CSV output and Welch's t-test summaries.
//!
//! Output directory layout:
//!
//! - `manifest.txt`: resolved config and its SHA-256
//! - `run_NNN.csv`: one row per episode (deterministic given the config)
//! - `runs.csv`: one row per run with the summary metrics
//! - `timing.csv`: wall-clock per episode, kept apart so the other files are
//!   byte-for-byte reproducible

mod checks;
mod config;
mod run;
mod stats;

pub use checks::{run_checks, CheckOutcome};
pub use config::{parse_pairs, AgentKind, EnvSpec, EvalConfig, ExperimentConfig};
pub use run::{
    convergence_episode, greedy_eval, optimal_steps, read_runs, run_experiment, run_single, GreedyEval, RunRecord,
    RunSummary, EPISODE_SCHEMA, RUNS_SCHEMA,
};
pub use stats::{
    incomplete_beta, ln_gamma, mean_var, student_t_two_sided, welch_t_test, SampleStats, SummaryStats, WelchResult,
};

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::agents::AgentError;
use crate::envs::EnvError;
use crate::mdp::MdpError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("statistics: {0}")]
    Stats(String),
    #[error("metric {0} is not available for these runs")]
    MissingMetric(&'static str),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("run {run} failed")]
    RunFailed { run: usize, source: Box<HarnessError> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    MeanTotalReward,
    MaxTotalReward,
    ConvergenceEpisode,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::MeanTotalReward => "mean_total_reward",
            Metric::MaxTotalReward => "max_total_reward",
            Metric::ConvergenceEpisode => "convergence_episode",
        }
    }

    fn get(self, r: &RunSummary) -> Option<f64> {
        match self {
            Metric::MeanTotalReward => r.mean_total_reward,
            Metric::MaxTotalReward => r.max_total_reward,
            Metric::ConvergenceEpisode => r.convergence_episode.map(|e| e as f64),
        }
    }
}

impl FromStr for Metric {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean_total_reward" | "mean" => Ok(Metric::MeanTotalReward),
            "max_total_reward" | "max" => Ok(Metric::MaxTotalReward),
            "convergence_episode" | "convergence" => Ok(Metric::ConvergenceEpisode),
            _ => Err(HarnessError::Config(format!("unknown metric {s:?}"))),
        }
    }
}

/// Metric value per run; errors if any run lacks it.
pub fn metric_values(runs: &[RunSummary], metric: Metric) -> Result<Vec<f64>, HarnessError> {
    runs.iter().map(|r| metric.get(r).ok_or(HarnessError::MissingMetric(metric.name()))).collect()
}

pub fn summarize(a: &[RunSummary], b: &[RunSummary], metric: Metric) -> Result<SummaryStats, HarnessError> {
    SummaryStats::from_samples(metric.name(), &metric_values(a, metric)?, &metric_values(b, metric)?)
}

pub fn summarize_dirs(a: &Path, b: &Path, metric: Metric) -> Result<SummaryStats, HarnessError> {
    summarize(&read_runs(a)?, &read_runs(b)?, metric)
}
