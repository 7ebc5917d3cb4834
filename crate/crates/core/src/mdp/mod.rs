//! Explicit finite MDPs and the exact machinery around them: partitions of
//! state-action pairs, verification of supplied symmetries, quotient models and
//! value iteration. These are the ground-truth oracles for the learning code.

mod homomorphism;
mod io;
mod partition;
mod quotient;
mod solve;

pub use homomorphism::{check_symmetry, equivalence_classes, equivalence_classes_of, SymmetryMap};
pub use io::{read_text, write_text};
pub use partition::{is_coarser, project_partition, validate_partition, Partition};
pub use quotient::{build_quotient, Quotient};
pub use solve::{value_iteration, QTable};

use thiserror::Error;

use crate::scalar::Real;

/// Default tolerance for exact tabular models.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MdpError {
    #[error("state-action ({state}, {action}) is out of range")]
    OutOfRange { state: usize, action: usize },
    #[error("state-action ({state}, {action}) was specified twice")]
    DuplicatePair { state: usize, action: usize },
    #[error("transition row for ({state}, {action}) sums to {sum}")]
    NotStochastic { state: usize, action: usize, sum: f64 },
    #[error("row for ({state}, {action}) has length {len}, expected {expected}")]
    RowLength { state: usize, action: usize, len: usize, expected: usize },
    #[error("partitions have different universe sizes ({left} vs {right})")]
    UniverseMismatch { left: usize, right: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid symmetry map: {0}")]
    InvalidMap(String),
    #[error("symmetry sends admissible ({state}, {action}) to an inadmissible pair")]
    InadmissibleImage { state: usize, action: usize },
    #[error("the supplied map is not a symmetry of the MDP")]
    NotASymmetry,
    #[error("block {block} is inconsistent: {detail}")]
    InconsistentBlock { block: usize, detail: String },
    #[error("undiscounted problem does not terminate from state {state}")]
    NonTerminating { state: usize },
    #[error("value iteration did not converge after {iterations} sweeps")]
    NotConverged { iterations: usize },
    #[error("gamma {0} outside [0, 1]")]
    BadDiscount(f64),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Finite MDP `⟨S, A, Ψ, T, R⟩` over dense state and action ids.
///
/// Transitions and rewards exist exactly on the admissible pairs. Terminal
/// states are absorbing: every action self-loops with zero reward.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp<T> {
    state_count: usize,
    action_count: usize,
    admissible: Vec<(usize, usize)>,
    pair_of: Vec<Option<usize>>,
    transition: Vec<Vec<T>>,
    reward: Vec<Vec<T>>,
    terminal: Vec<bool>,
}

impl<T: Real> TabularMdp<T> {
    pub fn builder(state_count: usize, action_count: usize) -> MdpBuilder<T> {
        MdpBuilder {
            state_count,
            action_count,
            rows: Vec::new(),
            terminal: vec![false; state_count],
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    /// Admissible pairs in `(state, action)` lexicographic order.
    pub fn admissible(&self) -> &[(usize, usize)] {
        &self.admissible
    }

    /// Position of `(s, a)` in [`admissible`](Self::admissible).
    pub fn pair_index(&self, state: usize, action: usize) -> Option<usize> {
        if state >= self.state_count || action >= self.action_count {
            return None;
        }
        self.pair_of[state * self.action_count + action]
    }

    pub fn is_admissible(&self, state: usize, action: usize) -> bool {
        self.pair_index(state, action).is_some()
    }

    pub fn actions(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.action_count).filter(move |&a| self.is_admissible(state, a))
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal[state]
    }

    pub fn terminal_states(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.state_count).filter(|&s| self.terminal[s])
    }

    pub fn transition_row(&self, state: usize, action: usize) -> Option<&[T]> {
        self.pair_index(state, action).map(|i| self.transition[i].as_slice())
    }

    pub fn reward_row(&self, state: usize, action: usize) -> Option<&[T]> {
        self.pair_index(state, action).map(|i| self.reward[i].as_slice())
    }

    pub fn transition(&self, state: usize, action: usize, next: usize) -> Option<T> {
        self.transition_row(state, action).map(|r| r[next])
    }

    pub fn reward(&self, state: usize, action: usize, next: usize) -> Option<T> {
        self.reward_row(state, action).map(|r| r[next])
    }

    /// Same dynamics with `shaping(s, s')` added to every non-terminal reward.
    pub fn with_shaping(&self, shaping: impl Fn(usize, usize) -> T) -> Self {
        let mut out = self.clone();
        for (idx, &(s, _)) in self.admissible.iter().enumerate() {
            if self.terminal[s] {
                continue;
            }
            for (next, r) in out.reward[idx].iter_mut().enumerate() {
                *r = *r + shaping(s, next);
            }
        }
        out
    }
}

/// Collects rows, then validates and freezes them into a [`TabularMdp`].
#[derive(Debug, Clone)]
pub struct MdpBuilder<T> {
    state_count: usize,
    action_count: usize,
    rows: Vec<(usize, usize, Vec<T>, Vec<T>)>,
    terminal: Vec<bool>,
}

impl<T: Real> MdpBuilder<T> {
    /// Adds an admissible pair with its transition and reward rows (length `S`).
    pub fn pair(mut self, state: usize, action: usize, transition: Vec<T>, reward: Vec<T>) -> Self {
        self.rows.push((state, action, transition, reward));
        self
    }

    /// Marks a state as terminal; all its actions become zero-reward self-loops.
    pub fn terminal(mut self, state: usize) -> Self {
        if state < self.state_count {
            self.terminal[state] = true;
        }
        self
    }

    pub fn build(self) -> Result<TabularMdp<T>, MdpError> {
        let MdpBuilder { state_count, action_count, mut rows, terminal } = self;
        if state_count == 0 || action_count == 0 {
            return Err(MdpError::OutOfRange { state: state_count, action: action_count });
        }
        rows.retain(|(s, _, _, _)| *s >= state_count || !terminal[*s]);
        for s in (0..state_count).filter(|&s| terminal[s]) {
            for a in 0..action_count {
                let mut t = vec![T::zero(); state_count];
                t[s] = T::one();
                rows.push((s, a, t, vec![T::zero(); state_count]));
            }
        }
        rows.sort_by_key(|(s, a, _, _)| (*s, *a));

        let mut pair_of = vec![None; state_count * action_count];
        let mut admissible = Vec::with_capacity(rows.len());
        let mut transition = Vec::with_capacity(rows.len());
        let mut reward = Vec::with_capacity(rows.len());
        let tol = T::lit(DEFAULT_TOL);
        for (s, a, t, r) in rows {
            if s >= state_count || a >= action_count {
                return Err(MdpError::OutOfRange { state: s, action: a });
            }
            for len in [t.len(), r.len()] {
                if len != state_count {
                    return Err(MdpError::RowLength { state: s, action: a, len, expected: state_count });
                }
            }
            let slot = &mut pair_of[s * action_count + a];
            if slot.is_some() {
                return Err(MdpError::DuplicatePair { state: s, action: a });
            }
            let sum: T = t.iter().copied().sum();
            if (sum - T::one()).abs() > tol || t.iter().any(|p| *p < T::zero() || !p.is_finite()) {
                return Err(MdpError::NotStochastic { state: s, action: a, sum: sum.as_f64() });
            }
            *slot = Some(admissible.len());
            admissible.push((s, a));
            transition.push(t);
            reward.push(r);
        }
        Ok(TabularMdp { state_count, action_count, admissible, pair_of, transition, reward, terminal })
    }
}
