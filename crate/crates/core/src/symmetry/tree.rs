use log::warn;

use super::{KeyInterner, SaKey, SymmetryError};

/// Nearest integer multiple of `quantum`, as an exact label.
pub fn quantize_reward(r: f64, quantum: f64) -> Result<i64, SymmetryError> {
    if !(quantum > 0.0 && quantum.is_finite()) {
        return Err(SymmetryError::BadQuantum(quantum));
    }
    if !r.is_finite() {
        return Err(SymmetryError::NonFiniteReward(r));
    }
    Ok((r / quantum).round() as i64)
}

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub depth: usize,
    /// Sorted by label.
    pub children: Vec<(i64, u32)>,
    /// `(key id, occurrences)` sorted by key id.
    pub entries: Vec<(u32, u64)>,
}

impl Node {
    fn new(depth: usize) -> Self {
        Node { depth, children: Vec::new(), entries: Vec::new() }
    }

    pub fn count(&self, key: u32) -> u64 {
        self.entries.binary_search_by_key(&key, |e| e.0).map_or(0, |i| self.entries[i].1)
    }
}

/// Prefix tree over quantized reward trails. Node `n` holds `(k, o)` when the
/// trail prefix spelled by the path to `n` was observed `o` times right after
/// visiting key `k`.
#[derive(Debug, Clone)]
pub struct RewardHistoryTree {
    depth_limit: usize,
    quantum: f64,
    node_entry_cap: usize,
    nodes: Vec<Node>,
    keys: KeyInterner,
    saturated: u64,
}

impl RewardHistoryTree {
    pub fn new(depth_limit: usize, quantum: f64) -> Result<Self, SymmetryError> {
        quantize_reward(0.0, quantum)?;
        Ok(RewardHistoryTree {
            depth_limit: depth_limit.max(1),
            quantum,
            node_entry_cap: usize::MAX,
            nodes: vec![Node::new(0)],
            keys: KeyInterner::default(),
            saturated: 0,
        })
    }

    /// Caps the number of distinct keys per node; further keys are not
    /// recorded at a full node.
    pub fn with_node_entry_cap(mut self, cap: usize) -> Self {
        self.node_entry_cap = cap.max(1);
        self
    }

    pub fn depth_limit(&self) -> usize {
        self.depth_limit
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn keys(&self) -> &KeyInterner {
        &self.keys
    }

    /// Observations dropped because a node was full.
    pub fn saturated_drops(&self) -> u64 {
        self.saturated
    }

    #[cfg(test)]
    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub(crate) fn node(&self, id: u32) -> &Node {
        &self.nodes[id as usize]
    }

    /// Occurrences of `key` after the trail `labels` (root excluded).
    pub fn count(&self, labels: &[i64], key: &SaKey) -> u64 {
        let Some(id) = self.keys.id(key) else { return 0 };
        let mut node = 0u32;
        for l in labels {
            match self.nodes[node as usize].children.binary_search_by_key(l, |c| c.0) {
                Ok(i) => node = self.nodes[node as usize].children[i].1,
                Err(_) => return 0,
            }
        }
        self.nodes[node as usize].count(id)
    }

    pub fn insert_episode(&mut self, keys: &[SaKey], rewards: &[f64]) -> Result<(), SymmetryError> {
        self.insert_episode_with(keys, rewards, |_, _, _, _| {})
    }

    /// Inserts every trail prefix of the episode. `on_increment(depth,
    /// entries, key, old_count)` runs just before a key's count at a node is
    /// incremented, with that node's current entries.
    pub(crate) fn insert_episode_with<F>(
        &mut self,
        keys: &[SaKey],
        rewards: &[f64],
        mut on_increment: F,
    ) -> Result<(), SymmetryError>
    where
        F: FnMut(usize, &[(u32, u64)], u32, u64),
    {
        if keys.len() != rewards.len() {
            return Err(SymmetryError::LengthMismatch { keys: keys.len(), rewards: rewards.len() });
        }
        let labels = rewards
            .iter()
            .map(|&r| quantize_reward(r, self.quantum))
            .collect::<Result<Vec<_>, _>>()?;
        for (t, key) in keys.iter().enumerate() {
            let id = self.keys.intern(*key);
            let end = (t + self.depth_limit).min(labels.len());
            let mut node = 0u32;
            for (depth, &label) in labels[t..end].iter().enumerate() {
                node = self.child_or_insert(node, label, depth + 1);
                let n = &mut self.nodes[node as usize];
                match n.entries.binary_search_by_key(&id, |e| e.0) {
                    Ok(i) => {
                        on_increment(depth + 1, &n.entries, id, n.entries[i].1);
                        n.entries[i].1 += 1;
                    }
                    Err(i) if n.entries.len() < self.node_entry_cap => {
                        on_increment(depth + 1, &n.entries, id, 0);
                        n.entries.insert(i, (id, 1));
                    }
                    Err(_) => {
                        if self.saturated == 0 {
                            warn!("reward history node reached its cap of {} keys", self.node_entry_cap);
                        }
                        self.saturated += 1;
                    }
                }
            }
        }
        Ok(())
    }

    fn child_or_insert(&mut self, parent: u32, label: i64, depth: usize) -> u32 {
        let next = self.nodes.len() as u32;
        let children = &mut self.nodes[parent as usize].children;
        match children.binary_search_by_key(&label, |c| c.0) {
            Ok(i) => children[i].1,
            Err(i) => {
                children.insert(i, (label, next));
                self.nodes.push(Node::new(depth));
                next
            }
        }
    }
}
