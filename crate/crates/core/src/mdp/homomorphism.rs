use super::{MdpError, Partition, TabularMdp};
use crate::scalar::Real;

/// Candidate automorphism: a state bijection `f` and, per state, an action
/// bijection `g_s`. Actions are permuted as raw ids; admissibility of the
/// images is checked against a concrete MDP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryMap {
    state_map: Vec<usize>,
    action_maps: Vec<Vec<usize>>,
}

fn is_permutation(map: &[usize]) -> bool {
    let mut seen = vec![false; map.len()];
    map.iter().all(|&x| x < map.len() && !std::mem::replace(&mut seen[x], true))
}

impl SymmetryMap {
    pub fn new(state_map: Vec<usize>, action_maps: Vec<Vec<usize>>) -> Result<Self, MdpError> {
        if !is_permutation(&state_map) {
            return Err(MdpError::InvalidMap("state map is not a bijection".into()));
        }
        if action_maps.len() != state_map.len() {
            return Err(MdpError::InvalidMap("one action map per state required".into()));
        }
        let width = action_maps.first().map_or(0, Vec::len);
        if action_maps.iter().any(|g| g.len() != width || !is_permutation(g)) {
            return Err(MdpError::InvalidMap("action map is not a bijection".into()));
        }
        Ok(SymmetryMap { state_map, action_maps })
    }

    pub fn identity(state_count: usize, action_count: usize) -> Self {
        SymmetryMap {
            state_map: (0..state_count).collect(),
            action_maps: vec![(0..action_count).collect(); state_count],
        }
    }

    pub fn map_state(&self, s: usize) -> usize {
        self.state_map[s]
    }

    pub fn map_action(&self, s: usize, a: usize) -> usize {
        self.action_maps[s][a]
    }

    pub fn map_pair(&self, (s, a): (usize, usize)) -> (usize, usize) {
        (self.state_map[s], self.action_maps[s][a])
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SymmetryMap) -> SymmetryMap {
        let state_map = other.state_map.iter().map(|&s| self.state_map[s]).collect();
        let action_maps = (0..other.state_map.len())
            .map(|s| {
                let t = other.state_map[s];
                other.action_maps[s].iter().map(|&a| self.action_maps[t][a]).collect()
            })
            .collect();
        SymmetryMap { state_map, action_maps }
    }

    fn fits<T: Real>(&self, mdp: &TabularMdp<T>) -> Result<(), MdpError> {
        if self.state_map.len() != mdp.state_count()
            || self.action_maps.first().map_or(0, Vec::len) != mdp.action_count()
        {
            return Err(MdpError::InvalidMap("map dimensions do not match the MDP".into()));
        }
        for &(s, a) in mdp.admissible() {
            let (fs, ga) = self.map_pair((s, a));
            if !mdp.is_admissible(fs, ga) {
                return Err(MdpError::InadmissibleImage { state: s, action: a });
            }
        }
        Ok(())
    }
}

/// Checks `T(f(s), g_s(a), f(s')) = T(s, a, s')` and the same for `R`, for
/// every admissible pair and successor, to within `tol`.
pub fn check_symmetry<T: Real>(mdp: &TabularMdp<T>, sym: &SymmetryMap, tol: T) -> Result<bool, MdpError> {
    sym.fits(mdp)?;
    for &(s, a) in mdp.admissible() {
        let (fs, ga) = sym.map_pair((s, a));
        let (t, r) = (mdp.transition_row(s, a).unwrap(), mdp.reward_row(s, a).unwrap());
        let (ft, fr) = (mdp.transition_row(fs, ga).unwrap(), mdp.reward_row(fs, ga).unwrap());
        for next in 0..mdp.state_count() {
            let fnext = sym.map_state(next);
            if (ft[fnext] - t[next]).abs() > tol || (fr[fnext] - r[next]).abs() > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Orbits of the admissible pairs under `sym`, as a partition indexed like
/// [`TabularMdp::admissible`].
pub fn equivalence_classes<T: Real>(mdp: &TabularMdp<T>, sym: &SymmetryMap) -> Result<Partition, MdpError> {
    equivalence_classes_of(mdp, std::slice::from_ref(sym))
}

/// Orbits under the group generated by several symmetries.
pub fn equivalence_classes_of<T: Real>(
    mdp: &TabularMdp<T>,
    generators: &[SymmetryMap],
) -> Result<Partition, MdpError> {
    let tol = T::lit(super::DEFAULT_TOL);
    for g in generators {
        if !check_symmetry(mdp, g, tol)? {
            return Err(MdpError::NotASymmetry);
        }
    }
    // The generated group is finite, so orbits are the connected components
    // of the generator graph.
    let n = mdp.admissible().len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in generators {
        for (i, &pair) in mdp.admissible().iter().enumerate() {
            let (fs, ga) = g.map_pair(pair);
            let j = mdp.pair_index(fs, ga).expect("checked admissible");
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(Partition::from_labels(&roots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::fixtures::{corridor, corridor_reflection};

    #[test]
    fn identity_is_always_a_symmetry() {
        let mdp = corridor(4);
        let id = SymmetryMap::identity(4, 2);
        assert!(check_symmetry(&mdp, &id, 1e-9).unwrap());
        let classes = equivalence_classes(&mdp, &id).unwrap();
        assert_eq!(classes.block_count(), mdp.admissible().len());
    }

    #[test]
    fn corridor_reflection_classes() {
        let mdp = corridor(3);
        let sym = corridor_reflection(3);
        assert!(check_symmetry(&mdp, &sym, 1e-9).unwrap());
        let classes = equivalence_classes(&mdp, &sym).unwrap();
        let idx = |s, a| mdp.pair_index(s, a).unwrap();
        let expected = Partition::from_blocks(
            &[vec![idx(0, 0), idx(2, 1)], vec![idx(0, 1), idx(2, 0)], vec![idx(1, 0), idx(1, 1)]],
            6,
        )
        .unwrap();
        assert!(classes.same_blocks(&expected));
    }

    #[test]
    fn orbit_closure_is_idempotent() {
        let mdp = corridor(5);
        let sym = corridor_reflection(5);
        let once = equivalence_classes(&mdp, &sym).unwrap();
        let twice = equivalence_classes_of(&mdp, &[sym.clone(), sym.clone()]).unwrap();
        let with_square = equivalence_classes_of(&mdp, &[sym.clone(), sym.compose(&sym)]).unwrap();
        assert!(once.same_blocks(&twice));
        assert!(once.same_blocks(&with_square));
        assert_eq!(sym.compose(&sym), SymmetryMap::identity(5, 2));
    }

    #[test]
    fn reflection_without_action_swap_fails() {
        let mdp = corridor(3);
        let bad = SymmetryMap::new(vec![2, 1, 0], vec![vec![0, 1]; 3]).unwrap();
        assert!(!check_symmetry(&mdp, &bad, 1e-9).unwrap());
        assert_eq!(equivalence_classes(&mdp, &bad).unwrap_err(), MdpError::NotASymmetry);
    }

    #[test]
    fn rejects_non_bijections_and_inadmissible_images() {
        assert!(SymmetryMap::new(vec![0, 0], vec![vec![0], vec![0]]).is_err());
        assert!(SymmetryMap::new(vec![0, 1], vec![vec![0, 0], vec![0, 1]]).is_err());
        let mdp = TabularMdp::<f64>::builder(2, 2)
            .pair(0, 0, vec![1.0, 0.0], vec![0.0; 2])
            .pair(1, 1, vec![0.0, 1.0], vec![0.0; 2])
            .build()
            .unwrap();
        let swap_states = SymmetryMap::new(vec![1, 0], vec![vec![0, 1]; 2]).unwrap();
        assert_eq!(
            check_symmetry(&mdp, &swap_states, 1e-9).unwrap_err(),
            MdpError::InadmissibleImage { state: 0, action: 0 }
        );
    }
}
