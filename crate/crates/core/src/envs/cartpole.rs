use rand::Rng;

use super::shaping::cartpole_shaping;
use super::{EnvError, Environment, QLayout, StepResult};
use crate::symmetry::SaKey;

/// `(θ, x, ω, v)`: pole angle, cart position, angular velocity, cart velocity.
pub type CartPoleState = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Push {
    Left = 0,
    Right = 1,
}

impl Push {
    pub fn from_action(action: usize) -> Option<Push> {
        match action {
            0 => Some(Push::Left),
            1 => Some(Push::Right),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartPoleConfig {
    /// Discretization half-widths for `(θ, x, ω, v)`.
    pub bounds: [f64; 4],
    pub levels: usize,
    pub max_steps: usize,
    /// Add the discretized state bonus to the reward.
    pub shaping: bool,
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    pub half_length: f64,
    pub force: f64,
    pub tau: f64,
    /// Episode ends once `|θ|` exceeds this (radians).
    pub theta_limit: f64,
    /// Episode ends once `|x|` exceeds this.
    pub x_limit: f64,
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        let theta_limit = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
        CartPoleConfig {
            bounds: [theta_limit, 2.4, 3.5, 3.0],
            levels: 9,
            max_steps: 1500,
            shaping: true,
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            half_length: 0.5,
            force: 10.0,
            tau: 0.02,
            theta_limit,
            x_limit: 2.4,
        }
    }
}

impl CartPoleConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.levels.is_multiple_of(2) {
            return Err(EnvError::Config(format!("levels must be odd, got {}", self.levels)));
        }
        if self.max_steps == 0 {
            return Err(EnvError::Config("max_steps must be positive".into()));
        }
        let positive = [
            self.gravity,
            self.cart_mass,
            self.pole_mass,
            self.half_length,
            self.force,
            self.tau,
            self.theta_limit,
            self.x_limit,
        ];
        if positive.iter().chain(&self.bounds).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(EnvError::Config("physics constants and bounds must be positive".into()));
        }
        Ok(())
    }

    /// One explicit Euler step of the pole-on-cart dynamics.
    pub fn dynamics(&self, s: &CartPoleState, push: Push) -> CartPoleState {
        let [theta, x, omega, v] = *s;
        let force = match push {
            Push::Left => -self.force,
            Push::Right => self.force,
        };
        let total = self.cart_mass + self.pole_mass;
        let pml = self.pole_mass * self.half_length;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pml * omega * omega * sin) / total;
        let theta_acc =
            (self.gravity * sin - cos * temp) / (self.half_length * (4.0 / 3.0 - self.pole_mass * cos * cos / total));
        let x_acc = temp - pml * theta_acc * cos / total;
        [
            theta + self.tau * omega,
            x + self.tau * v,
            omega + self.tau * theta_acc,
            v + self.tau * x_acc,
        ]
    }

    pub fn out_of_bounds(&self, s: &CartPoleState) -> bool {
        s[0].abs() > self.theta_limit || s[1].abs() > self.x_limit
    }
}

/// Per-dimension bin index `round(value / w)` with `w = 2·bound / L`,
/// clamped to `±(L − 1)/2`.
pub fn discretize(state: &CartPoleState, bounds: &[f64; 4], levels: usize) -> [i32; 4] {
    let half = (levels as i32 - 1) / 2;
    let mut out = [0; 4];
    for k in 0..4 {
        let w = 2.0 * bounds[k] / levels as f64;
        out[k] = ((state[k] / w).round() as i32).clamp(-half, half);
    }
    out
}

#[derive(Debug, Clone)]
pub struct CartPole {
    config: CartPoleConfig,
    state: CartPoleState,
    steps: usize,
    done: bool,
}

impl CartPole {
    pub fn new(config: CartPoleConfig) -> Result<Self, EnvError> {
        config.validate()?;
        Ok(CartPole { config, state: [0.0; 4], steps: 0, done: true })
    }

    pub fn config(&self) -> &CartPoleConfig {
        &self.config
    }

    pub fn set_state(&mut self, state: CartPoleState) {
        self.state = state;
        self.steps = 0;
        self.done = false;
    }

    pub fn discretize(&self, state: &CartPoleState) -> [i32; 4] {
        discretize(state, &self.config.bounds, self.config.levels)
    }

    pub fn step_push(&mut self, push: Push) -> Result<StepResult<CartPoleState>, EnvError> {
        if self.done {
            return Err(EnvError::Finished);
        }
        if self.state.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::NonFinite(self.state.to_vec()));
        }
        let next = self.config.dynamics(&self.state, push);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::NonFinite(next.to_vec()));
        }
        self.steps += 1;
        let terminated = self.config.out_of_bounds(&next);
        let truncated = !terminated && self.steps >= self.config.max_steps;
        let base = 1.0;
        let bonus = if self.config.shaping && !terminated {
            cartpole_shaping(self.discretize(&next), self.config.levels)
        } else {
            0.0
        };
        self.state = next;
        self.done = terminated || truncated;
        Ok(StepResult { next_state: next, base_reward: base, shaped_reward: base + bonus, terminated, truncated })
    }
}

impl Environment for CartPole {
    type State = CartPoleState;

    fn action_count(&self) -> usize {
        2
    }

    fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> CartPoleState {
        let s = std::array::from_fn(|_| rng.random_range(-0.05..0.05));
        self.set_state(s);
        s
    }

    fn state(&self) -> &CartPoleState {
        &self.state
    }

    fn step<R: Rng + ?Sized>(&mut self, action: usize, _rng: &mut R) -> Result<StepResult<CartPoleState>, EnvError> {
        let push = Push::from_action(action).ok_or(EnvError::BadAction { action, count: 2 })?;
        self.step_push(push)
    }

    fn key(&self, state: &CartPoleState, action: usize) -> SaKey {
        SaKey::new(&self.discretize(state), action)
    }

    fn layout(&self) -> QLayout {
        QLayout::PerAction
    }

    fn input_len(&self) -> usize {
        4
    }

    fn encode(&self, state: &CartPoleState, _action: Option<usize>, out: &mut [f64]) {
        out.copy_from_slice(state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_euler_step_from_rest() {
        let cfg = CartPoleConfig::default();
        let [theta, x, omega, v] = cfg.dynamics(&[0.0; 4], Push::Right);
        assert!((v - 0.19512).abs() < 1e-4);
        assert!((omega + 0.29268).abs() < 1e-4);
        assert_eq!((theta, x), (0.0, 0.0));
        let [_, _, omega, v] = cfg.dynamics(&[0.0; 4], Push::Left);
        assert!((v + 0.19512).abs() < 1e-4);
        assert!((omega - 0.29268).abs() < 1e-4);
    }

    #[test]
    fn termination_and_rewards() {
        let mut env = CartPole::new(CartPoleConfig::default()).unwrap();
        env.set_state([0.0, 2.4, 0.0, 1.0]);
        let r = env.step_push(Push::Right).unwrap();
        assert!(r.terminated && !r.truncated);
        assert_eq!(r.shaped_reward, r.base_reward);
        assert_eq!(env.step_push(Push::Right), Err(EnvError::Finished));

        env.set_state([0.0; 4]);
        let r = env.step_push(Push::Right).unwrap();
        assert!(!r.terminated);
        assert_eq!(r.base_reward, 1.0);
        let bonus = cartpole_shaping(env.discretize(&r.next_state), 9);
        assert_eq!(r.shaped_reward, 1.0 + bonus);
    }

    #[test]
    fn truncates_at_step_limit() {
        let cfg = CartPoleConfig { max_steps: 3, ..Default::default() };
        let mut env = CartPole::new(cfg).unwrap();
        env.set_state([0.0; 4]);
        let mut flags = vec![];
        for a in [Push::Right, Push::Left, Push::Right] {
            let r = env.step_push(a).unwrap();
            flags.push((r.terminated, r.truncated));
        }
        assert_eq!(flags, vec![(false, false), (false, false), (false, true)]);
    }

    #[test]
    fn non_finite_state() {
        let mut env = CartPole::new(CartPoleConfig::default()).unwrap();
        env.set_state([f64::NAN, 0.0, 0.0, 0.0]);
        assert!(matches!(env.step_push(Push::Left), Err(EnvError::NonFinite(_))));
    }

    #[test]
    fn discretization_examples() {
        let b = CartPoleConfig::default().bounds;
        assert_eq!(discretize(&[0.0; 4], &b, 9), [0; 4]);
        assert_eq!(discretize(&[0.0, 0.3, 0.0, 0.0], &b, 9)[1], 1);
        assert_eq!(discretize(&[0.0, -2.4, 0.0, 0.0], &b, 9)[1], -4);
        assert_eq!(discretize(&[0.0, 100.0, 0.0, 0.0], &b, 9)[1], 4);
    }

    #[test]
    fn even_levels_rejected() {
        assert!(CartPole::new(CartPoleConfig { levels: 8, ..Default::default() }).is_err());
    }

    fn state() -> impl Strategy<Value = CartPoleState> {
        proptest::array::uniform4(-3.0f64..3.0)
    }

    proptest! {
        #[test]
        fn dynamics_are_odd(s in state(), right in any::<bool>()) {
            let cfg = CartPoleConfig::default();
            let (a, b) = if right { (Push::Right, Push::Left) } else { (Push::Left, Push::Right) };
            let next = cfg.dynamics(&s, a);
            let mirrored = cfg.dynamics(&s.map(|v| -v), b);
            prop_assert_eq!(mirrored, next.map(|v| -v));
        }

        #[test]
        fn discretize_is_odd(s in state()) {
            let b = CartPoleConfig::default().bounds;
            prop_assert_eq!(discretize(&s.map(|v| -v), &b, 9), discretize(&s, &b, 9).map(|k| -k));
        }
    }
}
