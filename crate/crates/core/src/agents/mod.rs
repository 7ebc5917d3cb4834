//! ε-greedy DQN with experience replay, optionally extended with a symmetric
//! loss over pairs found by the reward-trail detector.

mod agent;
mod policy;
mod replay;

pub use agent::{Agent, AgentConfig, EpisodeStats, StepLosses};
pub use policy::{argmax, epsilon_at, select_action, EpsilonSchedule};
pub use replay::{ReplayBuffer, Transition};

use thiserror::Error;

use crate::envs::EnvError;
use crate::neural::NetError;
use crate::symmetry::SymmetryError;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("invalid agent configuration: {0}")]
    Config(String),
    #[error("non-finite {what} loss after {updates} updates")]
    NonFiniteLoss { what: &'static str, updates: u64 },
}
