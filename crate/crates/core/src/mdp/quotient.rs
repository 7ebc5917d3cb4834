use super::{project_partition, MdpError, Partition, QTable, TabularMdp};
use crate::scalar::Real;

/// Reduced MDP `M/C` together with the maps needed to lift its solution.
#[derive(Debug, Clone)]
pub struct Quotient<T> {
    pub mdp: TabularMdp<T>,
    /// Projection of the pair classes onto states; block ids are quotient states.
    pub state_blocks: Partition,
    /// For each admissible pair of the original MDP, its quotient action at
    /// the block of its state.
    pair_action: Vec<usize>,
    original_states: usize,
    original_actions: usize,
    original_pairs: Vec<(usize, usize)>,
}

impl<T: Real> Quotient<T> {
    /// Action values of the original MDP read off the quotient solution.
    pub fn lift(&self, q: &QTable<T>) -> QTable<T> {
        let mut out = QTable::new(self.original_states, self.original_actions);
        for (i, &(s, a)) in self.original_pairs.iter().enumerate() {
            let block = self.state_blocks.block_of(s);
            if let Some(v) = q.get(block, self.pair_action[i]) {
                out.set(s, a, v);
            }
        }
        out
    }
}

/// Aggregates `mdp` over the pair partition `classes` (indexed like
/// [`TabularMdp::admissible`]). Each class touching a state block becomes one
/// quotient action there; its transition mass and expected reward into every
/// successor block must agree across the class members to within `tol`.
pub fn build_quotient<T: Real>(
    mdp: &TabularMdp<T>,
    classes: &Partition,
    tol: T,
) -> Result<Quotient<T>, MdpError> {
    let pairs = mdp.admissible();
    if classes.universe_size() != pairs.len() {
        return Err(MdpError::UniverseMismatch { left: classes.universe_size(), right: pairs.len() });
    }
    let blocks = project_partition(pairs, classes, mdp.state_count());
    let block_count = blocks.block_count();

    // Classes available in each state block, in class-id order.
    let mut block_classes: Vec<Vec<usize>> = vec![Vec::new(); block_count];
    for (i, &(s, _)) in pairs.iter().enumerate() {
        block_classes[blocks.block_of(s)].push(classes.block_of(i));
    }
    for c in &mut block_classes {
        c.sort_unstable();
        c.dedup();
    }
    let action_count = block_classes.iter().map(Vec::len).max().unwrap_or(0).max(1);

    let mut terminal = vec![None::<bool>; block_count];
    for s in 0..mdp.state_count() {
        let b = blocks.block_of(s);
        match terminal[b] {
            None => terminal[b] = Some(mdp.is_terminal(s)),
            Some(t) if t != mdp.is_terminal(s) => {
                return Err(MdpError::InconsistentBlock {
                    block: b,
                    detail: "mixes terminal and non-terminal states".into(),
                })
            }
            Some(_) => {}
        }
    }

    // Per pair: transition mass and expected-reward mass into each block.
    let aggregate = |s: usize, a: usize| -> (Vec<T>, Vec<T>) {
        let t = mdp.transition_row(s, a).unwrap();
        let r = mdp.reward_row(s, a).unwrap();
        let mut mass = vec![T::zero(); block_count];
        let mut reward = vec![T::zero(); block_count];
        for next in 0..mdp.state_count() {
            let b = blocks.block_of(next);
            mass[b] = mass[b] + t[next];
            reward[b] = reward[b] + t[next] * r[next];
        }
        (mass, reward)
    };

    let mut representative: Vec<Vec<Option<(Vec<T>, Vec<T>)>>> =
        block_classes.iter().map(|c| vec![None; c.len()]).collect();
    let mut pair_action = vec![0; pairs.len()];
    for (i, &(s, a)) in pairs.iter().enumerate() {
        let b = blocks.block_of(s);
        let class = classes.block_of(i);
        let local = block_classes[b].binary_search(&class).expect("class touches its block");
        pair_action[i] = local;
        let agg = aggregate(s, a);
        match &representative[b][local] {
            None => representative[b][local] = Some(agg),
            Some((mass, reward)) => {
                let bad = (0..block_count)
                    .find(|&k| (mass[k] - agg.0[k]).abs() > tol || (reward[k] - agg.1[k]).abs() > tol);
                if let Some(k) = bad {
                    return Err(MdpError::InconsistentBlock {
                        block: class,
                        detail: format!("pair ({s}, {a}) disagrees on successor block {k}"),
                    });
                }
            }
        }
    }

    let mut builder = TabularMdp::builder(block_count, action_count);
    for (b, reps) in representative.into_iter().enumerate() {
        if terminal[b] == Some(true) {
            builder = builder.terminal(b);
            continue;
        }
        for (local, rep) in reps.into_iter().enumerate() {
            let (mass, reward_mass) = rep.expect("every class has a member");
            let reward = mass
                .iter()
                .zip(&reward_mass)
                .map(|(&m, &r)| if m > T::zero() { r / m } else { T::zero() })
                .collect();
            builder = builder.pair(b, local, mass, reward);
        }
    }
    Ok(Quotient {
        mdp: builder.build()?,
        state_blocks: blocks,
        pair_action,
        original_states: mdp.state_count(),
        original_actions: mdp.action_count(),
        original_pairs: pairs.to_vec(),
    })
}
