use std::collections::HashMap;

use super::{SaKey, SimilarityTable};

/// Thresholds for admitting a pair into the index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexParams {
    /// Minimum similarity `Δ`.
    pub delta: f64,
    /// Minimum `A_u` for both keys.
    pub min_support: u64,
    /// Maximum partners per key.
    pub cap: usize,
}

impl Default for IndexParams {
    fn default() -> Self {
        IndexParams { delta: 0.8, min_support: 20, cap: 5 }
    }
}

/// Thresholded partner lists plus, per key, the latest raw observation of
/// that key (what the network consumes when updating a partner).
#[derive(Debug, Clone)]
pub struct SymmetryIndex<R> {
    partners: HashMap<SaKey, Vec<(SaKey, f64)>>,
    representative: HashMap<SaKey, R>,
    pair_count: usize,
}

impl<R> Default for SymmetryIndex<R> {
    fn default() -> Self {
        SymmetryIndex { partners: HashMap::new(), representative: HashMap::new(), pair_count: 0 }
    }
}

impl<R> SymmetryIndex<R> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Partners of `key`, by descending similarity.
    pub fn partners(&self, key: &SaKey) -> &[(SaKey, f64)] {
        self.partners.get(key).map_or(&[], Vec::as_slice)
    }

    /// Number of unordered partner pairs.
    pub fn pair_count(&self) -> usize {
        self.pair_count
    }

    pub fn is_empty(&self) -> bool {
        self.pair_count == 0
    }

    pub fn observe(&mut self, key: SaKey, observation: R) {
        self.representative.insert(key, observation);
    }

    pub fn representative(&self, key: &SaKey) -> Option<&R> {
        self.representative.get(key)
    }
}

/// Rebuilds the partner lists from `table`.
///
/// Candidate pairs need `χ ≥ Δ` and both supports at least `min_support`.
/// They are accepted greedily in order of descending `χ` while both keys
/// have fewer than `cap` partners, so the relation stays symmetric.
pub fn update_index<R>(index: &mut SymmetryIndex<R>, table: &SimilarityTable, params: &IndexParams) {
    let keys = table.keys();
    let supported = |id: u32| table.occurrences_by_id(id) >= params.min_support.max(1);
    let mut candidates: Vec<(f64, SaKey, SaKey)> = Vec::new();
    for a in (0..keys.len() as u32).filter(|&a| supported(a)) {
        for (b, _) in table.row(a) {
            if b <= a || !supported(b) {
                continue;
            }
            let chi = table.similarity_by_id(a, b).unwrap_or(0.0);
            if chi >= params.delta {
                let (ka, kb) = (keys.key(a), keys.key(b));
                candidates.push((chi, ka.min(kb), ka.max(kb)));
            }
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    index.partners.clear();
    index.pair_count = 0;
    for (chi, a, b) in candidates {
        let full = |k: &SaKey, p: &HashMap<SaKey, Vec<(SaKey, f64)>>| p.get(k).map_or(0, Vec::len) >= params.cap;
        if full(&a, &index.partners) || full(&b, &index.partners) {
            continue;
        }
        index.partners.entry(a).or_default().push((b, chi));
        index.partners.entry(b).or_default().push((a, chi));
        index.pair_count += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::{compute_similarities, RewardHistoryTree};

    fn k(i: i32) -> SaKey {
        SaKey::new(&[i], 0)
    }

    /// a, b share trail "0" `shared` times each; b additionally sees "1" `extra_b` times.
    fn table(shared: usize, extra_b: usize, c_seen: bool) -> SimilarityTable {
        let mut tree = RewardHistoryTree::new(1, 1.0).unwrap();
        let mut keys = Vec::new();
        let mut rewards = Vec::new();
        for _ in 0..shared {
            keys.extend([k(0), k(1)]);
            rewards.extend([0.0, 0.0]);
        }
        for _ in 0..extra_b {
            keys.push(k(1));
            rewards.push(1.0);
        }
        if c_seen {
            keys.push(k(2));
            rewards.push(5.0);
        }
        tree.insert_episode(&keys, &rewards).unwrap();
        compute_similarities(&tree, 1, 1).unwrap()
    }

    #[test]
    fn single_key_has_no_partners() {
        let mut tree = RewardHistoryTree::new(1, 1.0).unwrap();
        tree.insert_episode(&vec![k(0); 30], &vec![0.0; 30]).unwrap();
        let mut index = SymmetryIndex::<()>::new();
        update_index(&mut index, &compute_similarities(&tree, 1, 1).unwrap(), &IndexParams::default());
        assert!(index.partners(&k(0)).is_empty());
        assert!(index.is_empty());
    }

    #[test]
    fn threshold_inclusion_is_symmetric() {
        // χ = 36 / sqrt(36 * 50) ≈ 0.8485
        let t = table(36, 14, true);
        let chi = crate::symmetry::similarity(&t, &k(0), &k(1)).unwrap();
        assert!((chi - 36.0 / (36.0f64 * 50.0).sqrt()).abs() < 1e-12);
        let mut index = SymmetryIndex::<()>::new();
        update_index(&mut index, &t, &IndexParams { delta: 0.8, min_support: 20, cap: 5 });
        assert_eq!(index.partners(&k(0)), &[(k(1), chi)]);
        assert_eq!(index.partners(&k(1)), &[(k(0), chi)]);
        assert_eq!(index.pair_count(), 1);
        update_index(&mut index, &t, &IndexParams { delta: 0.9, min_support: 20, cap: 5 });
        assert!(index.is_empty());
    }

    #[test]
    fn support_gate() {
        let t = table(12, 4, false);
        let mut index = SymmetryIndex::<()>::new();
        update_index(&mut index, &t, &IndexParams { delta: 0.8, min_support: 15, cap: 5 });
        assert!(index.partners(&k(0)).is_empty());
        update_index(&mut index, &t, &IndexParams { delta: 0.8, min_support: 12, cap: 5 });
        assert_eq!(index.partners(&k(0)).len(), 1);
    }

    #[test]
    fn cap_and_ordering() {
        // Five keys with identical trails, plus one slightly different.
        let mut tree = RewardHistoryTree::new(1, 1.0).unwrap();
        let mut keys = Vec::new();
        let mut rewards = Vec::new();
        for _ in 0..10 {
            for i in 0..5 {
                keys.push(k(i));
                rewards.push(0.0);
            }
        }
        keys.push(k(4));
        rewards.push(1.0);
        tree.insert_episode(&keys, &rewards).unwrap();
        let t = compute_similarities(&tree, 1, 1).unwrap();
        let mut index = SymmetryIndex::<()>::new();
        update_index(&mut index, &t, &IndexParams { delta: 0.5, min_support: 1, cap: 2 });
        for i in 0..5 {
            let p = index.partners(&k(i));
            assert!(p.len() <= 2);
            assert!(p.windows(2).all(|w| w[0].1 >= w[1].1));
            for (other, chi) in p {
                assert!(*chi >= 0.5);
                assert!(index.partners(other).iter().any(|(x, _)| *x == k(i)));
            }
        }
    }

    #[test]
    fn representatives_track_latest() {
        let mut index = SymmetryIndex::<[f64; 2]>::new();
        index.observe(k(0), [1.0, 2.0]);
        index.observe(k(0), [3.0, 4.0]);
        assert_eq!(index.representative(&k(0)), Some(&[3.0, 4.0]));
        assert_eq!(index.representative(&k(1)), None);
    }
}
