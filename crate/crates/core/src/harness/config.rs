use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use super::HarnessError;
use crate::agents::{AgentConfig, EpsilonSchedule};
use crate::envs::{CartPoleConfig, GridPos, GridWorldConfig, Potential};
use crate::symmetry::DetectorConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    /// `goal: None` draws the goal uniformly per run.
    Grid { config: GridWorldConfig, goal: Option<GridPos> },
    CartPole(CartPoleConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    Dqn,
    SymDqn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub window: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub kind: AgentKind,
    /// Detector settings; used only by [`AgentKind::SymDqn`].
    pub detector: DetectorConfig,
    pub agent: AgentConfig,
    /// Learning episodes per run, after warmup.
    pub episodes: usize,
    /// Independent runs, seeded `seed + k`.
    pub iterations: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub threads: usize,
    /// Grid worlds only: greedy evaluation after every episode.
    pub eval: EvalConfig,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value.trim().parse().map_err(|_| HarnessError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value.split(',').map(|v| parse(key, v)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, HarnessError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(HarnessError::Config(format!("{key}: expected true/false, got {value:?}"))),
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Reads `key = value` lines; `#` starts a comment. Later keys win.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn grid_defaults() -> Self {
        ExperimentConfig {
            env: EnvSpec::Grid {
                config: GridWorldConfig { shaping: Some(Potential::DiscountedDistance), ..Default::default() },
                goal: None,
            },
            kind: AgentKind::SymDqn,
            detector: DetectorConfig::default(),
            agent: AgentConfig {
                gamma: 0.9,
                lambda_sym: 0.4,
                batch_size: 32,
                learning_rate: 0.01,
                epsilon: EpsilonSchedule::constant(0.1),
                hidden: vec![120, 40],
                ..Default::default()
            },
            episodes: 200,
            iterations: 10,
            seed: 0,
            output_dir: None,
            threads: 1,
            eval: EvalConfig { window: 10, tolerance: 1.05 },
        }
    }

    pub fn cartpole_defaults() -> Self {
        ExperimentConfig {
            env: EnvSpec::CartPole(CartPoleConfig::default()),
            agent: AgentConfig { warmup_episodes: 25, ..Default::default() },
            episodes: 300,
            iterations: 15,
            ..Self::grid_defaults()
        }
    }

    /// Builds a config from key-value pairs. `env` picks the defaults; every
    /// other key overrides one field.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self, HarnessError> {
        let mut cfg = match pairs.get("env").map(String::as_str) {
            None | Some("grid") => Self::grid_defaults(),
            Some("cartpole") => Self::cartpole_defaults(),
            Some(other) => return Err(HarnessError::Config(format!("env: unknown environment {other:?}"))),
        };
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, HarnessError> {
        let mut pairs = parse_pairs(text)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("override {o:?}: expected key=value")))?;
            pairs.insert(k.trim().to_string(), v.trim().to_string());
        }
        Self::from_pairs(&pairs)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), HarnessError> {
        let a = &mut self.agent;
        let d = &mut self.detector;
        match key {
            "env" => {}
            "agent" => {
                self.kind = match v {
                    "dqn" => AgentKind::Dqn,
                    "symdqn" => AgentKind::SymDqn,
                    _ => return Err(HarnessError::Config(format!("agent: expected dqn or symdqn, got {v:?}"))),
                }
            }
            "episodes" => self.episodes = parse(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "output_dir" => self.output_dir = Some(PathBuf::from(v)),
            "threads" => self.threads = parse(key, v)?,
            "eval.window" => self.eval.window = parse(key, v)?,
            "eval.tolerance" => self.eval.tolerance = parse(key, v)?,

            "agent.gamma" => a.gamma = parse(key, v)?,
            "agent.lambda" => a.lambda_sym = parse(key, v)?,
            "agent.batch_size" => a.batch_size = parse(key, v)?,
            "agent.replay_capacity" => a.replay_capacity = parse(key, v)?,
            "agent.warmup_episodes" => a.warmup_episodes = parse(key, v)?,
            "agent.learning_rate" => a.learning_rate = parse(key, v)?,
            "agent.target_period" => a.target_period = parse(key, v)?,
            "agent.epsilon_start" => a.epsilon.start = parse(key, v)?,
            "agent.epsilon_floor" => a.epsilon.floor = parse(key, v)?,
            "agent.epsilon_rate" => a.epsilon.rate = parse(key, v)?,
            "agent.hidden" => a.hidden = parse_list(key, v)?,
            "agent.partners_per_item" => a.partners_per_item = parse(key, v)?,

            "detector.delta" => d.index.delta = parse(key, v)?,
            "detector.min_support" => d.index.min_support = parse(key, v)?,
            "detector.cap" => d.index.cap = parse(key, v)?,
            "detector.l0" => d.min_len = parse(key, v)?,
            "detector.i" => d.max_len = parse(key, v)?,
            "detector.quantum" => d.quantum = parse(key, v)?,
            "detector.node_entry_cap" => d.node_entry_cap = parse(key, v)?,

            _ => return self.set_env(key, v),
        }
        Ok(())
    }

    fn set_env(&mut self, key: &str, v: &str) -> Result<(), HarnessError> {
        match &mut self.env {
            EnvSpec::Grid { config: g, goal } => match key {
                "grid.size" => g.size = parse(key, v)?,
                "grid.dims" => g.dims = parse(key, v)?,
                "grid.slip_prob" => g.slip_prob = parse(key, v)?,
                "grid.max_steps" => g.max_steps = parse(key, v)?,
                "grid.potential_sign" => g.potential_sign = parse(key, v)?,
                "grid.shaping" => {
                    g.shaping = match v {
                        "none" => None,
                        "pot1" => Some(Potential::Distance),
                        "pot2" => Some(Potential::DiscountedDistance),
                        _ => return Err(HarnessError::Config(format!("grid.shaping: expected none, pot1 or pot2, got {v:?}"))),
                    }
                }
                "grid.goal" => {
                    *goal = match v {
                        "random" => None,
                        _ => {
                            let coords: Vec<i32> = parse_list(key, v)?;
                            if coords.len() > crate::envs::MAX_GRID_DIMS {
                                return Err(HarnessError::Config("grid.goal: too many coordinates".into()));
                            }
                            Some(GridPos::new(&coords))
                        }
                    }
                }
                _ => return Err(HarnessError::Config(format!("unknown key {key:?}"))),
            },
            EnvSpec::CartPole(c) => match key {
                "cartpole.levels" => c.levels = parse(key, v)?,
                "cartpole.max_steps" => c.max_steps = parse(key, v)?,
                "cartpole.shaping" => c.shaping = parse_bool(key, v)?,
                "cartpole.bounds" => {
                    let b: Vec<f64> = parse_list(key, v)?;
                    c.bounds = b
                        .try_into()
                        .map_err(|_| HarnessError::Config("cartpole.bounds: expected four values".into()))?;
                }
                "cartpole.gravity" => c.gravity = parse(key, v)?,
                "cartpole.cart_mass" => c.cart_mass = parse(key, v)?,
                "cartpole.pole_mass" => c.pole_mass = parse(key, v)?,
                "cartpole.half_length" => c.half_length = parse(key, v)?,
                "cartpole.force" => c.force = parse(key, v)?,
                "cartpole.tau" => c.tau = parse(key, v)?,
                "cartpole.theta_limit" => c.theta_limit = parse(key, v)?,
                "cartpole.x_limit" => c.x_limit = parse(key, v)?,
                _ => return Err(HarnessError::Config(format!("unknown key {key:?}"))),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.iterations == 0 {
            return Err(HarnessError::Config("iterations must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        if self.eval.window == 0 || self.eval.tolerance.is_nan() || self.eval.tolerance < 1.0 {
            return Err(HarnessError::Config("eval.window must be positive and eval.tolerance at least 1".into()));
        }
        match &self.env {
            EnvSpec::Grid { config, goal } => {
                let mut g = config.clone();
                // A random goal is drawn per run; any cell validates the rest.
                g.goal = goal.unwrap_or(GridPos::new(&[1; crate::envs::MAX_GRID_DIMS][..g.dims.min(crate::envs::MAX_GRID_DIMS)]));
                g.validate()?;
            }
            EnvSpec::CartPole(c) => c.validate()?,
        }
        self.agent.validate()?;
        if self.kind == AgentKind::SymDqn {
            let d = &self.detector;
            if d.min_len == 0 || d.min_len > d.max_len || d.index.cap == 0 || !(d.quantum > 0.0) {
                return Err(HarnessError::Config("detector: need 1 <= l0 <= i, cap >= 1, quantum > 0".into()));
            }
        }
        Ok(())
    }

    /// Agent settings with the detector attached for SymDQN.
    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            symmetry: (self.kind == AgentKind::SymDqn).then_some(self.detector),
            ..self.agent.clone()
        }
    }

    /// Every setting as sorted `key = value` lines; parsing this text gives
    /// back the same config.
    pub fn to_text(&self) -> String {
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        let a = &self.agent;
        let d = &self.detector;
        m.insert("agent", if self.kind == AgentKind::Dqn { "dqn" } else { "symdqn" }.into());
        m.insert("episodes", self.episodes.to_string());
        m.insert("iterations", self.iterations.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("threads", self.threads.to_string());
        m.insert("eval.window", self.eval.window.to_string());
        m.insert("eval.tolerance", self.eval.tolerance.to_string());
        if let Some(dir) = &self.output_dir {
            m.insert("output_dir", dir.display().to_string());
        }
        m.insert("agent.gamma", a.gamma.to_string());
        m.insert("agent.lambda", a.lambda_sym.to_string());
        m.insert("agent.batch_size", a.batch_size.to_string());
        m.insert("agent.replay_capacity", a.replay_capacity.to_string());
        m.insert("agent.warmup_episodes", a.warmup_episodes.to_string());
        m.insert("agent.learning_rate", a.learning_rate.to_string());
        m.insert("agent.target_period", a.target_period.to_string());
        m.insert("agent.epsilon_start", a.epsilon.start.to_string());
        m.insert("agent.epsilon_floor", a.epsilon.floor.to_string());
        m.insert("agent.epsilon_rate", a.epsilon.rate.to_string());
        m.insert("agent.hidden", join(&a.hidden));
        m.insert("agent.partners_per_item", a.partners_per_item.to_string());
        m.insert("detector.delta", d.index.delta.to_string());
        m.insert("detector.min_support", d.index.min_support.to_string());
        m.insert("detector.cap", d.index.cap.to_string());
        m.insert("detector.l0", d.min_len.to_string());
        m.insert("detector.i", d.max_len.to_string());
        m.insert("detector.quantum", d.quantum.to_string());
        m.insert("detector.node_entry_cap", d.node_entry_cap.to_string());
        match &self.env {
            EnvSpec::Grid { config: g, goal } => {
                m.insert("env", "grid".into());
                m.insert("grid.size", g.size.to_string());
                m.insert("grid.dims", g.dims.to_string());
                m.insert("grid.slip_prob", g.slip_prob.to_string());
                m.insert("grid.max_steps", g.max_steps.to_string());
                m.insert("grid.potential_sign", g.potential_sign.to_string());
                let shaping = match g.shaping {
                    None => "none",
                    Some(Potential::Distance) => "pot1",
                    Some(Potential::DiscountedDistance) => "pot2",
                };
                m.insert("grid.shaping", shaping.into());
                let goal = goal.map_or("random".to_string(), |p| join(p.coords(g.dims)));
                m.insert("grid.goal", goal);
            }
            EnvSpec::CartPole(c) => {
                m.insert("env", "cartpole".into());
                m.insert("cartpole.levels", c.levels.to_string());
                m.insert("cartpole.max_steps", c.max_steps.to_string());
                m.insert("cartpole.shaping", c.shaping.to_string());
                m.insert("cartpole.bounds", join(&c.bounds));
                m.insert("cartpole.gravity", c.gravity.to_string());
                m.insert("cartpole.cart_mass", c.cart_mass.to_string());
                m.insert("cartpole.pole_mass", c.pole_mass.to_string());
                m.insert("cartpole.half_length", c.half_length.to_string());
                m.insert("cartpole.force", c.force.to_string());
                m.insert("cartpole.tau", c.tau.to_string());
                m.insert("cartpole.theta_limit", c.theta_limit.to_string());
                m.insert("cartpole.x_limit", c.x_limit.to_string());
            }
        }
        let mut out = String::new();
        for (k, v) in m {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }
}
