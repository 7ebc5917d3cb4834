//! Symmetry detection from reward trails.
//!
//! Every visited state-action pair is followed by a trail of (quantized)
//! rewards. The [`RewardHistoryTree`] stores all trail prefixes up to a fixed
//! depth, with per-node occurrence counts for each pair. Pairs whose trail
//! multisets overlap strongly are considered symmetric:
//!
//! ```text
//! χ(a, b) = Σ_j |Π_a,j ∩ Π_b,j| / sqrt(Σ_j |Π_a,j| · Σ_j |Π_b,j|),   j = l0 ..= i
//! ```
//!
//! where `Π_x,j` is the multiset of length-`j` trails starting at `x` and the
//! intersection takes the smaller count per trail.

mod detector;
mod index;
mod key;
pub mod oracle;
mod similarity;
mod tree;

pub use detector::{Detector, DetectorConfig, DetectorStats};
pub use index::{update_index, IndexParams, SymmetryIndex};
pub use key::{KeyInterner, SaKey, MAX_DIMS};
pub use similarity::{compute_similarities, similarity, SimilarityTable};
pub use tree::{quantize_reward, RewardHistoryTree};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SymmetryError {
    #[error("reward {0} is not finite")]
    NonFiniteReward(f64),
    #[error("quantum must be positive, got {0}")]
    BadQuantum(f64),
    #[error("{keys} state-action keys but {rewards} rewards")]
    LengthMismatch { keys: usize, rewards: usize },
    #[error("trail lengths must satisfy 1 <= l0 <= i <= {limit}, got l0={l0}, i={i}")]
    BadLengths { l0: usize, i: usize, limit: usize },
}

/// Default reward quantum for tree labels.
pub const DEFAULT_QUANTUM: f64 = 1e-6;
