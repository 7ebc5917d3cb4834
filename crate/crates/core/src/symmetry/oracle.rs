//! Direct enumeration of the similarity measure, independent of the tree.

use std::collections::HashMap;

use super::{quantize_reward, SaKey};

/// One recorded episode: the visited keys and the reward that followed each.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub keys: Vec<SaKey>,
    pub rewards: Vec<f64>,
}

/// Multiset of trails of each length `l0 ..= i` following `key`.
fn trails(traces: &[Trace], key: &SaKey, l0: usize, i: usize, quantum: f64) -> HashMap<Vec<i64>, u64> {
    let mut out = HashMap::new();
    for trace in traces {
        let labels: Vec<i64> =
            trace.rewards.iter().map(|&r| quantize_reward(r, quantum).expect("finite reward")).collect();
        for t in (0..trace.keys.len()).filter(|&t| trace.keys[t] == *key) {
            for j in l0..=i {
                if t + j <= labels.len() {
                    *out.entry(labels[t..t + j].to_vec()).or_insert(0) += 1;
                }
            }
        }
    }
    out
}

/// Similarity of `a` and `b` computed literally from the trail sets;
/// `None` when either key has no trails of the requested lengths.
pub fn brute_force_similarity(traces: &[Trace], a: &SaKey, b: &SaKey, l0: usize, i: usize, quantum: f64) -> Option<f64> {
    let pa = trails(traces, a, l0, i, quantum);
    let pb = trails(traces, b, l0, i, quantum);
    let na: u64 = pa.values().sum();
    let nb: u64 = pb.values().sum();
    if na == 0 || nb == 0 {
        return None;
    }
    let shared: u64 = pa.iter().map(|(sigma, &n)| n.min(pb.get(sigma).copied().unwrap_or(0))).sum();
    Some(shared as f64 / ((na as f64) * (nb as f64)).sqrt())
}
