//! Symmetry discovery from reward trails and symmetry-regularized deep Q-learning.
//!
//! The crate is organised bottom-up:
//!
//! * [`mdp`] finite MDPs, partitions, symmetry verification, quotients and value iteration.
//! * [`envs`] grid world and cart-pole environments with reward shaping.
//! * [`symmetry`] the reward history tree and the similarity index built from it.
//! * [`neural`] a small fully connected Q-network with exact backpropagation.
//! * [`agents`] ε-greedy DQN and its symmetric variant.
//! * [`harness`] seeded experiments, CSV output, convergence detection and Welch's t-test.
//!
//! Numerical code in [`mdp`] and [`neural`] is generic over the floating point
//! type; the aliases below fix it to `f64`, which is what the agents use.

pub mod agents;
pub mod envs;
pub mod harness;
pub mod mdp;
pub mod neural;
pub mod scalar;
pub mod symmetry;

pub use scalar::{Real, Scalar};

/// Double precision tabular MDP.
pub type TabularMdp64 = mdp::TabularMdp<f64>;
/// Single precision tabular MDP.
pub type TabularMdp32 = mdp::TabularMdp<f32>;
/// Double precision Q-network.
pub type Mlp64 = neural::Mlp<f64>;
/// Single precision Q-network.
pub type Mlp32 = neural::Mlp<f32>;
/// Gradient buffer matching [`Mlp64`].
pub type Gradients64 = neural::GradientBuffer<f64>;
/// Q-table produced by value iteration in double precision.
pub type QTable64 = mdp::QTable<f64>;
