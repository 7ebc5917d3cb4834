use std::collections::{HashMap, VecDeque};

use super::{KeyInterner, RewardHistoryTree, SaKey, SymmetryError};

/// Occurrence (`A_u`) and co-occurrence (`A_p`) counts for trail lengths
/// `l0 ..= i`. Keys use the ids of the tree they were computed from.
#[derive(Debug, Clone, Default)]
pub struct SimilarityTable {
    l0: usize,
    i: usize,
    keys: KeyInterner,
    occurrences: Vec<u64>,
    /// Off-diagonal co-occurrences, stored in both rows.
    co: Vec<HashMap<u32, u64>>,
}

impl SimilarityTable {
    pub fn empty(l0: usize, i: usize) -> Self {
        SimilarityTable { l0, i, ..Default::default() }
    }

    pub fn lengths(&self) -> (usize, usize) {
        (self.l0, self.i)
    }

    pub fn keys(&self) -> &KeyInterner {
        &self.keys
    }

    pub fn occurrences(&self, key: &SaKey) -> u64 {
        self.keys.id(key).map_or(0, |id| self.occurrences_by_id(id))
    }

    pub fn co_occurrences(&self, a: &SaKey, b: &SaKey) -> u64 {
        match (self.keys.id(a), self.keys.id(b)) {
            (Some(x), Some(y)) => self.co_by_id(x, y),
            _ => 0,
        }
    }

    pub(crate) fn occurrences_by_id(&self, id: u32) -> u64 {
        self.occurrences.get(id as usize).copied().unwrap_or(0)
    }

    pub(crate) fn co_by_id(&self, a: u32, b: u32) -> u64 {
        if a == b {
            return self.occurrences_by_id(a);
        }
        self.co.get(a as usize).and_then(|row| row.get(&b)).copied().unwrap_or(0)
    }

    /// Co-occurrence row of `id` (partners with a positive count).
    pub(crate) fn row(&self, id: u32) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.co.get(id as usize).into_iter().flat_map(|r| r.iter().map(|(&k, &v)| (k, v)))
    }

    pub(crate) fn similarity_by_id(&self, a: u32, b: u32) -> Option<f64> {
        let (ua, ub) = (self.occurrences_by_id(a), self.occurrences_by_id(b));
        if ua == 0 || ub == 0 {
            return None;
        }
        Some(self.co_by_id(a, b) as f64 / ((ua as f64) * (ub as f64)).sqrt())
    }

    pub(crate) fn sync_keys(&mut self, keys: &KeyInterner) {
        self.keys.extend_from(keys);
        self.occurrences.resize(self.keys.len(), 0);
        self.co.resize_with(self.keys.len(), HashMap::new);
    }

    /// Incremental update for one count increment `old -> old + 1` of `key`
    /// at a node of depth `depth` whose entries (before the increment) are
    /// `entries`. `A_p(key, k')` grows by one exactly for entries with count
    /// above `old`.
    pub(crate) fn record_increment(&mut self, depth: usize, entries: &[(u32, u64)], key: u32, old: u64) {
        if depth < self.l0 || depth > self.i {
            return;
        }
        let needed = key as usize + 1;
        if self.occurrences.len() < needed {
            self.occurrences.resize(needed, 0);
            self.co.resize_with(needed, HashMap::new);
        }
        self.occurrences[key as usize] += 1;
        for &(other, o) in entries {
            if other != key && o > old {
                if self.co.len() <= other as usize {
                    self.occurrences.resize(other as usize + 1, 0);
                    self.co.resize_with(other as usize + 1, HashMap::new);
                }
                *self.co[key as usize].entry(other).or_insert(0) += 1;
                *self.co[other as usize].entry(key).or_insert(0) += 1;
            }
        }
    }

    fn add_node(&mut self, entries: &[(u32, u64)]) {
        for (x, &(a, oa)) in entries.iter().enumerate() {
            self.occurrences[a as usize] += oa;
            for &(b, ob) in &entries[x + 1..] {
                let m = oa.min(ob);
                *self.co[a as usize].entry(b).or_insert(0) += m;
                *self.co[b as usize].entry(a).or_insert(0) += m;
            }
        }
    }
}

/// Breadth-first pass over the tree accumulating `A_u` and `A_p` over nodes
/// at depths `l0 ..= i`.
pub fn compute_similarities(tree: &RewardHistoryTree, l0: usize, i: usize) -> Result<SimilarityTable, SymmetryError> {
    if l0 < 1 || l0 > i || i > tree.depth_limit() {
        return Err(SymmetryError::BadLengths { l0, i, limit: tree.depth_limit() });
    }
    let mut table = SimilarityTable::empty(l0, i);
    table.sync_keys(tree.keys());
    let mut queue: VecDeque<u32> = tree.root().children.iter().map(|c| c.1).collect();
    while let Some(id) = queue.pop_front() {
        let node = tree.node(id);
        if node.depth >= l0 {
            table.add_node(&node.entries);
        }
        if node.depth < i {
            queue.extend(node.children.iter().map(|c| c.1));
        }
    }
    Ok(table)
}

/// `χ(a, b) = A_p(a, b) / sqrt(A_u(a) A_u(b))`; `None` when either key has no data.
pub fn similarity(table: &SimilarityTable, a: &SaKey, b: &SaKey) -> Option<f64> {
    table.similarity_by_id(table.keys.id(a)?, table.keys.id(b)?)
}
