use rand::Rng;

use super::shaping::{potential_shaping, Potential};
use super::{EnvError, Environment, QLayout, StepResult};
use crate::mdp::{MdpError, SymmetryMap, TabularMdp};
use crate::symmetry::SaKey;

pub const MAX_GRID_DIMS: usize = 3;

/// Grid cell with 1-based coordinates. Axes beyond the configured
/// dimensionality are pinned at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPos(pub [i32; MAX_GRID_DIMS]);

impl GridPos {
    pub fn new(coords: &[i32]) -> Self {
        assert!(coords.len() <= MAX_GRID_DIMS, "at most {MAX_GRID_DIMS} dimensions");
        let mut c = [1; MAX_GRID_DIMS];
        c[..coords.len()].copy_from_slice(coords);
        GridPos(c)
    }

    pub fn coords(&self, dims: usize) -> &[i32] {
        &self.0[..dims]
    }
}

/// Where a step actually goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Intended,
    /// Slip towards the given direction id (same numbering as actions).
    Slip(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridWorldConfig {
    pub size: usize,
    pub dims: usize,
    pub slip_prob: f64,
    pub goal: GridPos,
    pub gamma: f64,
    pub max_steps: usize,
    pub shaping: Option<Potential>,
    /// Multiplies the potential before shaping; +1 or −1.
    pub potential_sign: f64,
}

impl Default for GridWorldConfig {
    fn default() -> Self {
        GridWorldConfig {
            size: 9,
            dims: 2,
            slip_prob: 0.1,
            goal: GridPos::new(&[5, 5]),
            gamma: 0.9,
            max_steps: 480,
            shaping: None,
            potential_sign: 1.0,
        }
    }
}

impl GridWorldConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.size == 0 {
            return Err(EnvError::Config("grid size must be positive".into()));
        }
        if !(1..=MAX_GRID_DIMS).contains(&self.dims) {
            return Err(EnvError::Config(format!("dims must be 1..={MAX_GRID_DIMS}")));
        }
        if !(0.0..=1.0).contains(&self.slip_prob) {
            return Err(EnvError::Config(format!("slip_prob {} outside [0,1]", self.slip_prob)));
        }
        if self.max_steps == 0 {
            return Err(EnvError::Config("max_steps must be positive".into()));
        }
        if !self.contains(&self.goal) {
            return Err(EnvError::Config(format!("goal {:?} outside grid", self.goal.coords(self.dims))));
        }
        Ok(())
    }

    pub fn contains(&self, p: &GridPos) -> bool {
        let n = self.size as i32;
        p.0.iter().enumerate().all(|(k, &c)| if k < self.dims { (1..=n).contains(&c) } else { c == 1 })
    }

    pub fn action_count(&self) -> usize {
        2 * self.dims
    }

    pub fn state_count(&self) -> usize {
        self.size.pow(self.dims as u32)
    }

    /// Row-major index, first coordinate most significant.
    pub fn index_of(&self, p: &GridPos) -> usize {
        p.coords(self.dims).iter().fold(0, |acc, &c| acc * self.size + (c - 1) as usize)
    }

    pub fn pos_of(&self, mut index: usize) -> GridPos {
        let mut c = [1; MAX_GRID_DIMS];
        for k in (0..self.dims).rev() {
            c[k] = (index % self.size) as i32 + 1;
            index /= self.size;
        }
        GridPos(c)
    }

    /// Neighbor of `p` in direction `dir`: `2k` is +axis k, `2k+1` is −axis k.
    /// Moves off the grid stay put.
    pub fn neighbor(&self, p: &GridPos, dir: usize) -> GridPos {
        let axis = dir / 2;
        let delta = if dir.is_multiple_of(2) { 1 } else { -1 };
        let mut q = *p;
        let c = q.0[axis] + delta;
        if (1..=self.size as i32).contains(&c) {
            q.0[axis] = c;
        }
        q
    }

    /// Deterministic successor for an already-drawn move.
    pub fn transition(&self, p: &GridPos, action: usize, mv: Move) -> GridPos {
        match mv {
            Move::Intended => self.neighbor(p, action),
            Move::Slip(dir) => self.neighbor(p, dir),
        }
    }

    pub fn shaping_term(&self, s: &GridPos, s_next: &GridPos) -> f64 {
        match self.shaping {
            None => 0.0,
            Some(kind) => potential_shaping(
                kind,
                s.coords(self.dims),
                s_next.coords(self.dims),
                self.goal.coords(self.dims),
                self.gamma,
                self.potential_sign,
            ),
        }
    }

    pub fn base_reward(&self, s_next: &GridPos) -> f64 {
        if *s_next == self.goal {
            1.0
        } else {
            0.0
        }
    }

    /// Exact tabular model of the grid (state ids from [`index_of`](Self::index_of)),
    /// with shaped rewards when shaping is configured. The goal is terminal.
    pub fn tabular(&self) -> Result<TabularMdp<f64>, MdpError> {
        let n_actions = self.action_count();
        let mut b = TabularMdp::builder(self.state_count(), n_actions);
        let goal = self.index_of(&self.goal);
        b = b.terminal(goal);
        for s in 0..self.state_count() {
            if s == goal {
                continue;
            }
            let p = self.pos_of(s);
            for a in 0..n_actions {
                let mut probs = vec![0.0; self.state_count()];
                let mut rewards = vec![0.0; self.state_count()];
                let slip_each = self.slip_prob / n_actions as f64;
                let mut add = |q: GridPos, mass: f64| {
                    let t = self.index_of(&q);
                    probs[t] += mass;
                    rewards[t] = self.base_reward(&q) + self.shaping_term(&p, &q);
                };
                add(self.transition(&p, a, Move::Intended), 1.0 - self.slip_prob);
                for dir in 0..n_actions {
                    add(self.transition(&p, a, Move::Slip(dir)), slip_each);
                }
                b = b.pair(s, a, probs, rewards);
            }
        }
        b.build()
    }

    /// Mirror across the hyperplane normal to `axis` through the grid centre,
    /// swapping the two actions along that axis. It is a symmetry of the MDP
    /// only when the goal lies on the mirror.
    pub fn reflection(&self, axis: usize) -> Result<SymmetryMap, MdpError> {
        let n = self.size as i32;
        let state_map: Vec<usize> = (0..self.state_count())
            .map(|s| {
                let mut p = self.pos_of(s);
                p.0[axis] = n + 1 - p.0[axis];
                self.index_of(&p)
            })
            .collect();
        let action_map: Vec<usize> = (0..self.action_count())
            .map(|a| if a / 2 == axis { a ^ 1 } else { a })
            .collect();
        SymmetryMap::new(state_map.clone(), vec![action_map; state_map.len()])
    }
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    config: GridWorldConfig,
    pos: GridPos,
    steps: usize,
    done: bool,
}

impl GridWorld {
    pub fn new(config: GridWorldConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let pos = config.pos_of(0);
        Ok(GridWorld { config, pos, steps: 0, done: true })
    }

    pub fn config(&self) -> &GridWorldConfig {
        &self.config
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Places the agent at `pos` and starts a fresh episode there.
    pub fn set_state(&mut self, pos: GridPos) -> Result<(), EnvError> {
        if !self.config.contains(&pos) {
            return Err(EnvError::OutOfGrid(pos.coords(self.config.dims).to_vec()));
        }
        self.pos = pos;
        self.steps = 0;
        self.done = pos == self.config.goal;
        Ok(())
    }

    /// Step with the move already decided; shared by sampling and tests.
    pub fn step_with(&mut self, action: usize, mv: Move) -> Result<StepResult<GridPos>, EnvError> {
        let cfg = &self.config;
        if action >= cfg.action_count() {
            return Err(EnvError::BadAction { action, count: cfg.action_count() });
        }
        if let Move::Slip(dir) = mv {
            if dir >= cfg.action_count() {
                return Err(EnvError::BadAction { action: dir, count: cfg.action_count() });
            }
        }
        if !cfg.contains(&self.pos) {
            return Err(EnvError::OutOfGrid(self.pos.coords(cfg.dims).to_vec()));
        }
        if self.done || self.pos == cfg.goal {
            return Err(EnvError::Finished);
        }
        let next = cfg.transition(&self.pos, action, mv);
        let base = cfg.base_reward(&next);
        let shaped = base + cfg.shaping_term(&self.pos, &next);
        self.steps += 1;
        let terminated = next == cfg.goal;
        let truncated = !terminated && self.steps >= cfg.max_steps;
        self.pos = next;
        self.done = terminated || truncated;
        Ok(StepResult { next_state: next, base_reward: base, shaped_reward: shaped, terminated, truncated })
    }
}

impl Environment for GridWorld {
    type State = GridPos;

    fn action_count(&self) -> usize {
        self.config.action_count()
    }

    /// Uniform start over non-goal cells.
    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> GridPos {
        let goal = self.config.index_of(&self.config.goal);
        let mut s = rng.random_range(0..self.config.state_count() - 1);
        if s >= goal {
            s += 1;
        }
        self.pos = self.config.pos_of(s);
        self.steps = 0;
        self.done = false;
        self.pos
    }

    fn state(&self) -> &GridPos {
        &self.pos
    }

    fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<StepResult<GridPos>, EnvError> {
        let mv = if rng.random::<f64>() < self.config.slip_prob {
            Move::Slip(rng.random_range(0..self.config.action_count()))
        } else {
            Move::Intended
        };
        self.step_with(action, mv)
    }

    fn key(&self, state: &GridPos, action: usize) -> SaKey {
        SaKey::new(state.coords(self.config.dims), action)
    }

    fn layout(&self) -> QLayout {
        QLayout::ActionInput
    }

    fn input_len(&self) -> usize {
        self.config.state_count() + self.config.action_count()
    }

    /// One-hot state index followed by one-hot action.
    fn encode(&self, state: &GridPos, action: Option<usize>, out: &mut [f64]) {
        out.fill(0.0);
        out[self.config.index_of(state)] = 1.0;
        let a = action.expect("grid encoding needs an action");
        out[self.config.state_count() + a] = 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{check_symmetry, value_iteration};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const E: usize = 0;
    const W: usize = 1;

    fn grid(size: usize, goal: &[i32]) -> GridWorld {
        GridWorld::new(GridWorldConfig { size, goal: GridPos::new(goal), ..Default::default() }).unwrap()
    }

    #[test]
    fn deterministic_branches() {
        let mut g = grid(9, &[6, 1]);
        g.set_state(GridPos::new(&[2, 1])).unwrap();
        let r = g.step_with(E, Move::Intended).unwrap();
        assert_eq!(r.next_state, GridPos::new(&[3, 1]));
        assert_eq!(r.base_reward, 0.0);
        assert!(!r.terminated);

        g.set_state(GridPos::new(&[1, 1])).unwrap();
        assert_eq!(g.step_with(W, Move::Intended).unwrap().next_state, GridPos::new(&[1, 1]));

        g.set_state(GridPos::new(&[5, 1])).unwrap();
        let r = g.step_with(E, Move::Intended).unwrap();
        assert!(r.terminated && !r.truncated);
        assert_eq!(r.base_reward, 1.0);
        assert_eq!(g.step_with(E, Move::Intended), Err(EnvError::Finished));
    }

    #[test]
    fn out_of_grid_is_rejected() {
        let mut g = grid(3, &[2, 2]);
        assert!(matches!(g.set_state(GridPos::new(&[4, 1])), Err(EnvError::OutOfGrid(_))));
        g.pos = GridPos::new(&[0, 1]);
        g.done = false;
        assert!(matches!(g.step_with(E, Move::Intended), Err(EnvError::OutOfGrid(_))));
    }

    #[test]
    fn truncation() {
        let mut g = GridWorld::new(GridWorldConfig { size: 3, max_steps: 2, goal: GridPos::new(&[3, 3]), ..Default::default() })
            .unwrap();
        g.set_state(GridPos::new(&[1, 1])).unwrap();
        assert!(!g.step_with(W, Move::Intended).unwrap().truncated);
        let r = g.step_with(W, Move::Intended).unwrap();
        assert!(r.truncated && !r.terminated);
    }

    #[test]
    fn shaped_reward_adds_potential_difference() {
        let cfg = GridWorldConfig { shaping: Some(Potential::Distance), goal: GridPos::new(&[6, 1]), ..Default::default() };
        let mut g = GridWorld::new(cfg).unwrap();
        g.set_state(GridPos::new(&[2, 1])).unwrap();
        let r = g.step_with(E, Move::Intended).unwrap();
        assert!((r.shaped_reward - (-1.3)).abs() < 1e-12);
    }

    #[test]
    fn encoding() {
        let g = grid(3, &[2, 2]);
        let mut v = vec![0.0; g.input_len()];
        assert_eq!(v.len(), 13);
        g.encode(&GridPos::new(&[1, 1]), Some(0), &mut v);
        let ones: Vec<usize> = (0..13).filter(|&i| v[i] == 1.0).collect();
        assert_eq!(ones, vec![0, 9]);
        g.encode(&GridPos::new(&[3, 3]), Some(3), &mut v);
        let ones: Vec<usize> = (0..13).filter(|&i| v[i] == 1.0).collect();
        assert_eq!(ones, vec![8, 12]);

        let mut seen = std::collections::HashSet::new();
        for s in 0..9 {
            for a in 0..4 {
                g.encode(&g.config().pos_of(s), Some(a), &mut v);
                assert!(seen.insert(v.iter().map(|x| *x as u8).collect::<Vec<_>>()));
            }
        }
    }

    #[test]
    fn index_roundtrip_3d() {
        let cfg = GridWorldConfig { size: 4, dims: 3, goal: GridPos::new(&[1, 1, 1]), ..Default::default() };
        for s in 0..64 {
            assert_eq!(cfg.index_of(&cfg.pos_of(s)), s);
        }
        assert_eq!(cfg.index_of(&GridPos::new(&[2, 1, 1])), 16);
    }

    #[test]
    fn intended_neighbor_frequency() {
        for dims in [2usize, 3] {
            let cfg = GridWorldConfig { size: 5, dims, goal: GridPos::new(&[1; 3][..dims]), ..Default::default() };
            let mut g = GridWorld::new(cfg).unwrap();
            let start = GridPos::new(&[3; 3][..dims]);
            let target = g.config().neighbor(&start, 0);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let n = 100_000;
            let mut hits = 0;
            for _ in 0..n {
                g.set_state(start).unwrap();
                if g.step(0, &mut rng).unwrap().next_state == target {
                    hits += 1;
                }
            }
            let freq = hits as f64 / n as f64;
            let expected = 0.9 + 0.1 / (2 * dims) as f64;
            assert!((freq - expected).abs() < 0.01, "dims {dims}: {freq} vs {expected}");
        }
    }

    #[test]
    fn reset_never_starts_at_goal() {
        let mut g = grid(3, &[2, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..500 {
            let p = g.reset(&mut rng);
            assert_ne!(p, GridPos::new(&[2, 2]));
            seen.insert(p);
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn tabular_model_and_reflection() {
        let cfg = GridWorldConfig { size: 3, slip_prob: 0.0, goal: GridPos::new(&[2, 2]), ..Default::default() };
        let mdp = cfg.tabular().unwrap();
        let sym = cfg.reflection(0).unwrap();
        assert_eq!(sym.map_state(cfg.index_of(&GridPos::new(&[1, 3]))), cfg.index_of(&GridPos::new(&[3, 3])));
        assert_eq!(sym.map_action(0, E), W);
        assert!(check_symmetry(&mdp, &sym, 1e-9).unwrap());

        let off = GridWorldConfig { goal: GridPos::new(&[3, 2]), ..cfg.clone() };
        assert!(!check_symmetry(&off.tabular().unwrap(), &off.reflection(0).unwrap(), 1e-9).unwrap());
    }

    #[test]
    fn shaping_keeps_greedy_actions() {
        for kind in [Potential::Distance, Potential::DiscountedDistance] {
            for sign in [1.0, -1.0] {
                let base = GridWorldConfig { size: 5, goal: GridPos::new(&[2, 4]), ..Default::default() };
                let shaped = GridWorldConfig { shaping: Some(kind), potential_sign: sign, ..base.clone() };
                let q0 = value_iteration(&base.tabular().unwrap(), 0.9, 1e-12).unwrap();
                let q1 = value_iteration(&shaped.tabular().unwrap(), 0.9, 1e-12).unwrap();
                for s in 0..25 {
                    assert_eq!(q0.greedy_set(s, 1e-8), q1.greedy_set(s, 1e-8), "state {s}");
                }
            }
        }
    }
}
