use std::collections::HashMap;
use std::fmt;

/// Largest discrete state dimensionality a key can carry (cart-pole uses 4).
pub const MAX_DIMS: usize = 4;

/// Discretized state-action pair at the detector's granularity. Unused cell
/// coordinates are zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SaKey {
    pub cell: [i32; MAX_DIMS],
    pub action: u32,
}

impl SaKey {
    pub fn new(cell: &[i32], action: usize) -> Self {
        assert!(cell.len() <= MAX_DIMS, "at most {MAX_DIMS} discrete dimensions");
        let mut c = [0; MAX_DIMS];
        c[..cell.len()].copy_from_slice(cell);
        SaKey { cell: c, action: action as u32 }
    }

    pub fn action(&self) -> usize {
        self.action as usize
    }
}

impl fmt::Debug for SaKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{:?},{}>", self.cell, self.action)
    }
}

/// Dense ids for keys, assigned in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct KeyInterner {
    keys: Vec<SaKey>,
    ids: HashMap<SaKey, u32>,
}

impl KeyInterner {
    pub fn intern(&mut self, key: SaKey) -> u32 {
        let next = self.keys.len() as u32;
        *self.ids.entry(key).or_insert_with(|| {
            self.keys.push(key);
            next
        })
    }

    pub fn id(&self, key: &SaKey) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: u32) -> SaKey {
        self.keys[id as usize]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[SaKey] {
        &self.keys
    }

    /// Appends keys `other` has beyond our length; both must share a prefix.
    pub fn extend_from(&mut self, other: &KeyInterner) {
        for &k in &other.keys[self.keys.len()..] {
            self.intern(k);
        }
    }
}
