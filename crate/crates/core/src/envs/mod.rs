//! Episodic environments: an n-dimensional slippery grid world, cart-pole,
//! and a wrapper that samples episodes from any [`TabularMdp`](crate::mdp::TabularMdp).

mod cartpole;
mod grid;
mod shaping;
mod tabular;

pub use cartpole::{discretize, CartPole, CartPoleConfig, CartPoleState, Push};
pub use grid::{GridPos, GridWorld, GridWorldConfig, Move, MAX_GRID_DIMS};
pub use shaping::{cartpole_shaping, potential, potential_shaping, Potential};
pub use tabular::MdpEnv;

use rand::Rng;
use thiserror::Error;

use crate::symmetry::SaKey;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("position {0:?} is outside the grid")]
    OutOfGrid(Vec<i32>),
    #[error("action {action} invalid ({count} actions)")]
    BadAction { action: usize, count: usize },
    #[error("state is not finite: {0:?}")]
    NonFinite(Vec<f64>),
    #[error("episode already finished")]
    Finished,
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<S> {
    pub next_state: S,
    pub base_reward: f64,
    /// `base_reward` plus the shaping term; this is what agents learn from.
    pub shaped_reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}

/// How a Q-network sees an environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QLayout {
    /// Input is the state, one output per action.
    PerAction,
    /// Input encodes the state-action pair, single output.
    ActionInput,
}

pub trait Environment {
    type State: Clone + Send + Sync + std::fmt::Debug;

    fn action_count(&self) -> usize;

    /// Starts a new episode and returns its first state.
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Self::State;

    fn state(&self) -> &Self::State;

    fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<StepResult<Self::State>, EnvError>;

    /// Discrete key the symmetry detector uses for `(state, action)`.
    fn key(&self, state: &Self::State, action: usize) -> SaKey;

    fn layout(&self) -> QLayout;

    /// Length of the network input.
    fn input_len(&self) -> usize;

    /// Writes the network input for `state` (and `action` under
    /// [`QLayout::ActionInput`]) into `out`, which has length `input_len()`.
    fn encode(&self, state: &Self::State, action: Option<usize>, out: &mut [f64]);
}
