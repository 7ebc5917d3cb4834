use super::{
    update_index, IndexParams, RewardHistoryTree, SaKey, SimilarityTable, SymmetryError, SymmetryIndex,
    DEFAULT_QUANTUM,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub quantum: f64,
    /// Shortest trail length counted (`l0`).
    pub min_len: usize,
    /// Longest trail length counted and tree depth (`i`).
    pub max_len: usize,
    pub index: IndexParams,
    pub node_entry_cap: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { quantum: DEFAULT_QUANTUM, min_len: 1, max_len: 5, index: IndexParams::default(), node_entry_cap: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectorStats {
    pub nodes: usize,
    pub keys: usize,
    pub partner_pairs: usize,
}

/// Tree, similarity counts and partner index for one run.
///
/// Counts are maintained incrementally while episodes are inserted; they
/// always equal what [`compute_similarities`](super::compute_similarities)
/// would produce on the same tree.
#[derive(Debug, Clone)]
pub struct Detector<R> {
    config: DetectorConfig,
    tree: RewardHistoryTree,
    table: SimilarityTable,
    index: SymmetryIndex<R>,
}

impl<R> Detector<R> {
    pub fn new(config: DetectorConfig) -> Result<Self, SymmetryError> {
        if config.min_len < 1 || config.min_len > config.max_len {
            return Err(SymmetryError::BadLengths { l0: config.min_len, i: config.max_len, limit: config.max_len });
        }
        let tree = RewardHistoryTree::new(config.max_len, config.quantum)?.with_node_entry_cap(config.node_entry_cap);
        Ok(Detector {
            config,
            tree,
            table: SimilarityTable::empty(config.min_len, config.max_len),
            index: SymmetryIndex::new(),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn tree(&self) -> &RewardHistoryTree {
        &self.tree
    }

    pub fn table(&self) -> &SimilarityTable {
        &self.table
    }

    pub fn index(&self) -> &SymmetryIndex<R> {
        &self.index
    }

    /// Records the latest raw observation for `key`.
    pub fn observe(&mut self, key: SaKey, observation: R) {
        self.index.observe(key, observation);
    }

    /// Adds a finished episode and refreshes the partner index.
    pub fn end_episode(&mut self, keys: &[SaKey], rewards: &[f64]) -> Result<(), SymmetryError> {
        let table = &mut self.table;
        self.tree.insert_episode_with(keys, rewards, |depth, entries, key, old| {
            table.record_increment(depth, entries, key, old)
        })?;
        self.table.sync_keys(self.tree.keys());
        update_index(&mut self.index, &self.table, &self.config.index);
        Ok(())
    }

    pub fn stats(&self) -> DetectorStats {
        DetectorStats { nodes: self.tree.node_count(), keys: self.tree.keys().len(), partner_pairs: self.index.pair_count() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::compute_similarities;

    #[test]
    fn incremental_table_tracks_tree() {
        let config = DetectorConfig {
            quantum: 1.0,
            min_len: 1,
            max_len: 3,
            index: IndexParams { delta: 0.9, min_support: 2, cap: 3 },
            node_entry_cap: 512,
        };
        let mut det = Detector::<()>::new(config).unwrap();
        let k = |i: i32, a: usize| SaKey::new(&[i], a);
        for ep in 0..5 {
            det.end_episode(&[k(ep, 0), k(-ep, 1), k(0, 0)], &[1.0, 1.0, 0.0]).unwrap();
        }
        let full = compute_similarities(det.tree(), 1, 3).unwrap();
        for a in det.tree().keys().keys() {
            assert_eq!(det.table().occurrences(a), full.occurrences(a));
            for b in det.tree().keys().keys() {
                assert_eq!(det.table().co_occurrences(a, b), full.co_occurrences(a, b));
            }
        }
        assert!(det.stats().nodes > 1);
    }

    #[test]
    fn rejects_bad_lengths() {
        let config = DetectorConfig { min_len: 3, max_len: 2, ..Default::default() };
        assert!(Detector::<()>::new(config).is_err());
    }
}
