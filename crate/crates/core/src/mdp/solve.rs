use super::{MdpError, TabularMdp};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 1_000_000;

/// Action values over a `states × actions` grid; inadmissible entries are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<T> {
    action_count: usize,
    values: Vec<Option<T>>,
}

impl<T: Real> QTable<T> {
    pub fn new(state_count: usize, action_count: usize) -> Self {
        QTable { action_count, values: vec![None; state_count * action_count] }
    }

    pub fn state_count(&self) -> usize {
        self.values.len() / self.action_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn get(&self, s: usize, a: usize) -> Option<T> {
        self.values[s * self.action_count + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: T) {
        self.values[s * self.action_count + a] = Some(v);
    }

    /// `max_a Q(s, a)`, or zero when no action is admissible.
    pub fn value(&self, s: usize) -> T {
        self.row(s).map(|(_, q)| q).reduce(T::max).unwrap_or_else(T::zero)
    }

    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        (0..self.action_count).filter_map(move |a| self.get(s, a).map(|q| (a, q)))
    }

    /// Actions whose value is within `tie_tol` of the best one.
    pub fn greedy_set(&self, s: usize, tie_tol: T) -> Vec<usize> {
        let best = self.value(s);
        self.row(s).filter(|&(_, q)| best - q <= tie_tol).map(|(a, _)| a).collect()
    }

    /// Largest absolute difference over entries defined in both tables.
    pub fn sup_distance(&self, other: &QTable<T>) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .filter_map(|(a, b)| Some((*a.as_ref()? - *b.as_ref()?).abs()))
            .fold(T::zero(), T::max)
    }
}

/// Optimal action values by Bellman sweeps until successive iterates differ by
/// at most `tol` in sup-norm. Terminal states have value zero.
pub fn value_iteration<T: Real>(mdp: &TabularMdp<T>, gamma: T, tol: T) -> Result<QTable<T>, MdpError> {
    if !(gamma >= T::zero() && gamma <= T::one()) {
        return Err(MdpError::BadDiscount(gamma.as_f64()));
    }
    if gamma == T::one() {
        check_terminates(mdp)?;
    }
    let n = mdp.state_count();
    let mut v = vec![T::zero(); n];
    let mut q = QTable::new(n, mdp.action_count());
    for sweep in 0..MAX_SWEEPS {
        let mut delta = T::zero();
        for &(s, a) in mdp.admissible() {
            let value: T = if mdp.is_terminal(s) {
                T::zero()
            } else {
                let t = mdp.transition_row(s, a).unwrap();
                let r = mdp.reward_row(s, a).unwrap();
                (0..n).filter(|&x| t[x] > T::zero()).map(|x| t[x] * (r[x] + gamma * v[x])).sum()
            };
            let old: Option<T> = q.get(s, a);
            delta = delta.max(old.map_or(T::infinity(), |o| (o - value).abs()));
            q.set(s, a, value);
        }
        for (s, vs) in v.iter_mut().enumerate() {
            *vs = if mdp.is_terminal(s) { T::zero() } else { q.value(s) };
        }
        if delta <= tol && sweep > 0 {
            return Ok(q);
        }
    }
    if gamma == T::one() {
        return Err(MdpError::NonTerminating { state: 0 });
    }
    Err(MdpError::NotConverged { iterations: MAX_SWEEPS })
}

/// Every non-terminal state must reach a terminal state along some path.
fn check_terminates<T: Real>(mdp: &TabularMdp<T>) -> Result<(), MdpError> {
    let n = mdp.state_count();
    let mut reaches: Vec<bool> = (0..n).map(|s| mdp.is_terminal(s)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for &(s, a) in mdp.admissible() {
            if reaches[s] {
                continue;
            }
            let t = mdp.transition_row(s, a).unwrap();
            if (0..n).any(|x| t[x] > T::zero() && reaches[x]) {
                reaches[s] = true;
                changed = true;
            }
        }
    }
    match reaches.iter().position(|r| !r) {
        Some(state) => Err(MdpError::NonTerminating { state }),
        None => Ok(()),
    }
}
