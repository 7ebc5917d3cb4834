use std::collections::HashMap;

use super::MdpError;

/// Partition of `{0, .., universe_size - 1}` with contiguous block ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    block_of: Vec<usize>,
    block_count: usize,
}

/// True iff `blocks` are non-empty, pairwise disjoint and cover the universe.
pub fn validate_partition(blocks: &[Vec<usize>], universe_size: usize) -> bool {
    let mut seen = vec![false; universe_size];
    for block in blocks {
        if block.is_empty() {
            return false;
        }
        for &x in block {
            if x >= universe_size || seen[x] {
                return false;
            }
            seen[x] = true;
        }
    }
    seen.into_iter().all(|s| s)
}

impl Partition {
    pub fn from_blocks(blocks: &[Vec<usize>], universe_size: usize) -> Result<Self, MdpError> {
        if !validate_partition(blocks, universe_size) {
            return Err(MdpError::InvalidPartition(format!(
                "{blocks:?} does not partition {universe_size} elements"
            )));
        }
        let mut labels = vec![0; universe_size];
        for (b, block) in blocks.iter().enumerate() {
            for &x in block {
                labels[x] = b;
            }
        }
        Ok(Self::from_labels(&labels))
    }

    /// Builds a partition from arbitrary per-element labels; block ids are
    /// renumbered in order of first appearance.
    pub fn from_labels<L: std::hash::Hash + Eq + Clone>(labels: &[L]) -> Self {
        let mut ids: HashMap<L, usize> = HashMap::new();
        let block_of = labels
            .iter()
            .map(|l| {
                let next = ids.len();
                *ids.entry(l.clone()).or_insert(next)
            })
            .collect();
        Partition { block_of, block_count: ids.len() }
    }

    pub fn singletons(universe_size: usize) -> Self {
        Partition { block_of: (0..universe_size).collect(), block_count: universe_size }
    }

    pub fn universe_size(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    pub fn labels(&self) -> &[usize] {
        &self.block_of
    }

    /// Blocks as sorted element lists, ordered by block id.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count];
        for (x, &b) in self.block_of.iter().enumerate() {
            out[b].push(x);
        }
        out
    }

    /// Same blocks irrespective of numbering.
    pub fn same_blocks(&self, other: &Partition) -> bool {
        let mut a = self.blocks();
        let mut b = other.blocks();
        a.sort();
        b.sort();
        a == b
    }
}

/// True iff every block of `fine` lies inside a single block of `coarse`.
pub fn is_coarser(coarse: &Partition, fine: &Partition) -> Result<bool, MdpError> {
    if coarse.universe_size() != fine.universe_size() {
        return Err(MdpError::UniverseMismatch {
            left: coarse.universe_size(),
            right: fine.universe_size(),
        });
    }
    let mut image: Vec<Option<usize>> = vec![None; fine.block_count()];
    for x in 0..fine.universe_size() {
        let slot = &mut image[fine.block_of(x)];
        match *slot {
            None => *slot = Some(coarse.block_of(x)),
            Some(b) if b != coarse.block_of(x) => return Ok(false),
            Some(_) => {}
        }
    }
    Ok(true)
}

/// Projects a partition of `pairs ⊆ X × Y` onto `X = {0, .., x_size - 1}`:
/// `x` and `x'` share a block iff they touch exactly the same set of blocks.
/// Elements touching no pair form one block together.
pub fn project_partition(pairs: &[(usize, usize)], blocks: &Partition, x_size: usize) -> Partition {
    assert_eq!(pairs.len(), blocks.universe_size(), "partition must cover the pair list");
    let mut touched: Vec<Vec<usize>> = vec![Vec::new(); x_size];
    for (i, &(x, _)) in pairs.iter().enumerate() {
        touched[x].push(blocks.block_of(i));
    }
    for t in &mut touched {
        t.sort_unstable();
        t.dedup();
    }
    Partition::from_labels(&touched)
}
