use rand::Rng;

use super::{EnvError, Environment, QLayout, StepResult};
use crate::mdp::TabularMdp;
use crate::symmetry::SaKey;

/// Samples episodes from an explicit MDP. Every non-terminal state must admit
/// every action. Starts are uniform over non-terminal states.
#[derive(Debug, Clone)]
pub struct MdpEnv {
    mdp: TabularMdp<f64>,
    starts: Vec<usize>,
    max_steps: usize,
    state: usize,
    steps: usize,
    done: bool,
}

impl MdpEnv {
    pub fn new(mdp: TabularMdp<f64>, max_steps: usize) -> Result<Self, EnvError> {
        let starts: Vec<usize> = (0..mdp.state_count()).filter(|&s| !mdp.is_terminal(s)).collect();
        if starts.is_empty() {
            return Err(EnvError::Config("no non-terminal states".into()));
        }
        for &s in &starts {
            if mdp.actions(s).count() != mdp.action_count() {
                return Err(EnvError::Config(format!("state {s} does not admit every action")));
            }
        }
        Ok(MdpEnv { mdp, starts, max_steps, state: 0, steps: 0, done: true })
    }

    pub fn mdp(&self) -> &TabularMdp<f64> {
        &self.mdp
    }

    pub fn set_state(&mut self, s: usize) {
        self.state = s;
        self.steps = 0;
        self.done = self.mdp.is_terminal(s);
    }
}

impl Environment for MdpEnv {
    type State = usize;

    fn action_count(&self) -> usize {
        self.mdp.action_count()
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let s = self.starts[rng.random_range(0..self.starts.len())];
        self.set_state(s);
        s
    }

    fn state(&self) -> &usize {
        &self.state
    }

    fn step<R: Rng + ?Sized>(&mut self, action: usize, rng: &mut R) -> Result<StepResult<usize>, EnvError> {
        if action >= self.mdp.action_count() {
            return Err(EnvError::BadAction { action, count: self.mdp.action_count() });
        }
        if self.done {
            return Err(EnvError::Finished);
        }
        let row = self.mdp.transition_row(self.state, action).expect("admissible by construction");
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (t, &p) in row.iter().enumerate() {
            acc += p;
            if p > 0.0 && u < acc {
                next = t;
                break;
            }
        }
        let reward = self.mdp.reward(self.state, action, next).unwrap_or(0.0);
        self.steps += 1;
        let terminated = self.mdp.is_terminal(next);
        let truncated = !terminated && self.steps >= self.max_steps;
        self.state = next;
        self.done = terminated || truncated;
        Ok(StepResult { next_state: next, base_reward: reward, shaped_reward: reward, terminated, truncated })
    }

    fn key(&self, state: &usize, action: usize) -> SaKey {
        SaKey::new(&[*state as i32], action)
    }

    fn layout(&self) -> QLayout {
        QLayout::PerAction
    }

    fn input_len(&self) -> usize {
        self.mdp.state_count()
    }

    fn encode(&self, state: &usize, _action: Option<usize>, out: &mut [f64]) {
        out.fill(0.0);
        out[*state] = 1.0;
    }
}
