use std::time::Instant;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;

use super::policy::{argmax, select_action, EpsilonSchedule};
use super::replay::{ReplayBuffer, Transition};
use super::AgentError;
use crate::envs::{Environment, QLayout};
use crate::neural::Mlp;
use crate::symmetry::{Detector, DetectorConfig, SaKey};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    /// Weight of the symmetric loss.
    pub lambda_sym: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Leading episodes played uniformly at random without training.
    pub warmup_episodes: usize,
    pub learning_rate: f64,
    /// Updates between target refreshes; 1 bootstraps from the online network.
    pub target_period: usize,
    pub epsilon: EpsilonSchedule,
    pub hidden: Vec<usize>,
    /// `None` gives plain DQN.
    pub symmetry: Option<DetectorConfig>,
    /// Partners drawn per batch item for the symmetric batch (at most the
    /// index cap).
    pub partners_per_item: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.99,
            lambda_sym: 1.0,
            batch_size: 128,
            replay_capacity: 100_000,
            warmup_episodes: 0,
            learning_rate: 0.001,
            target_period: 1,
            epsilon: EpsilonSchedule::default(),
            hidden: vec![100, 100],
            symmetry: None,
            partners_per_item: 1,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let err = |m: &str| Err(AgentError::Config(m.to_string()));
        if !(0.0..1.0).contains(&self.gamma) {
            return err("gamma must be in [0, 1)");
        }
        if !(self.lambda_sym >= 0.0 && self.lambda_sym.is_finite()) {
            return err("lambda_sym must be finite and non-negative");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return err("batch_size must be positive and no larger than the replay capacity");
        }
        if self.target_period == 0 {
            return err("target_period must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return err("learning_rate must be finite and non-negative");
        }
        Ok(())
    }
}

/// Per-episode record.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub warmup: bool,
    pub base_reward: f64,
    pub shaped_reward: f64,
    pub steps: usize,
    pub epsilon: f64,
    /// Mean over this episode's updates; 0 when there were none.
    pub td_loss: f64,
    pub sym_loss: f64,
    pub updates: usize,
    pub sym_updates: usize,
    /// Partner pairs in the index after the episode.
    pub partner_pairs: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLosses {
    pub td: f64,
    pub sym: Option<f64>,
}

pub struct Agent<E: Environment> {
    config: AgentConfig,
    net: Mlp<f64>,
    target: Option<Mlp<f64>>,
    replay: ReplayBuffer<E::State>,
    detector: Option<Detector<E::State>>,
    layout: QLayout,
    action_count: usize,
    input_len: usize,
    updates: u64,
    episodes: usize,
}

impl<E: Environment> Agent<E> {
    pub fn new(env: &E, config: AgentConfig, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let layout = env.layout();
        let outputs = match layout {
            QLayout::PerAction => env.action_count(),
            QLayout::ActionInput => 1,
        };
        let mut sizes = vec![env.input_len()];
        sizes.extend(&config.hidden);
        sizes.push(outputs);
        let net = Mlp::init(&sizes, seed)?;
        let detector = config.symmetry.map(Detector::new).transpose()?;
        let target = (config.target_period > 1).then(|| net.clone());
        Ok(Agent {
            replay: ReplayBuffer::new(config.replay_capacity),
            config,
            net,
            target,
            detector,
            layout,
            action_count: env.action_count(),
            input_len: env.input_len(),
            updates: 0,
            episodes: 0,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn net(&self) -> &Mlp<f64> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp<f64> {
        &mut self.net
    }

    pub fn replay(&self) -> &ReplayBuffer<E::State> {
        &self.replay
    }

    pub fn replay_mut(&mut self) -> &mut ReplayBuffer<E::State> {
        &mut self.replay
    }

    pub fn detector(&self) -> Option<&Detector<E::State>> {
        self.detector.as_ref()
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn episodes(&self) -> usize {
        self.episodes
    }

    /// Network input rows for `(state, action)` items.
    fn encode_rows<'a>(&self, env: &E, items: impl ExactSizeIterator<Item = (&'a E::State, usize)>) -> Array2<f64>
    where
        E::State: 'a,
    {
        let mut rows = Array2::zeros((items.len(), self.input_len));
        for ((s, a), mut row) in items.zip(rows.rows_mut()) {
            let action = (self.layout == QLayout::ActionInput).then_some(a);
            env.encode(s, action, row.as_slice_mut().expect("standard layout"));
        }
        rows
    }

    /// Q-values of every action for each state, one row per state.
    pub fn q_matrix(&self, net: &Mlp<f64>, env: &E, states: &[&E::State]) -> Result<Array2<f64>, AgentError> {
        let n_actions = self.action_count;
        match self.layout {
            QLayout::PerAction => {
                let x = self.encode_rows(env, states.iter().map(|s| (*s, 0)));
                Ok(net.forward_batch(x.view())?)
            }
            QLayout::ActionInput => {
                let pairs: Vec<(&E::State, usize)> =
                    states.iter().flat_map(|s| (0..n_actions).map(move |a| (*s, a))).collect();
                let x = self.encode_rows(env, pairs.into_iter());
                let out = net.forward_batch(x.view())?;
                Ok(out.into_shape_with_order((states.len(), n_actions)).expect("one output per pair"))
            }
        }
    }

    pub fn q_values(&self, env: &E, state: &E::State) -> Result<Vec<f64>, AgentError> {
        Ok(self.q_matrix(&self.net, env, &[state])?.into_raw_vec_and_offset().0)
    }

    pub fn greedy_action(&self, env: &E, state: &E::State) -> Result<usize, AgentError> {
        Ok(argmax(&self.q_values(env, state)?))
    }

    /// One TD update on the replay items `batch`. Returns the loss and the
    /// selected outputs before the update.
    pub fn dqn_train_step(&mut self, env: &E, batch: &[usize]) -> Result<(f64, Vec<f64>), AgentError> {
        let next: Vec<&E::State> = batch.iter().map(|&i| &self.replay.get(i).next_state).collect();
        let bootstrap_net = self.target.as_ref().unwrap_or(&self.net);
        let next_q = self.q_matrix(bootstrap_net, env, &next)?;
        let targets: Vec<f64> = batch
            .iter()
            .zip(next_q.rows())
            .map(|(&i, q)| {
                let t = self.replay.get(i);
                if t.terminated {
                    t.reward
                } else {
                    t.reward + self.config.gamma * q.fold(f64::NEG_INFINITY, |m, &v| m.max(v))
                }
            })
            .collect();
        let x = self.encode_rows(env, batch.iter().map(|&i| {
            let t = self.replay.get(i);
            (&t.state, t.action)
        }));
        let select: Vec<usize> = match self.layout {
            QLayout::PerAction => batch.iter().map(|&i| self.replay.get(i).action).collect(),
            QLayout::ActionInput => vec![0; batch.len()],
        };
        let res = self.net.selected_mse(x.view(), &select, &targets)?;
        if !res.loss.is_finite() {
            return Err(AgentError::NonFiniteLoss { what: "td", updates: self.updates });
        }
        self.net.apply_update(&res.grads, self.config.learning_rate, 1.0)?;
        self.updates += 1;
        if let Some(target) = &mut self.target {
            if self.updates.is_multiple_of(self.config.target_period as u64) {
                target.load_params(&self.net.clone_params())?;
            }
        }
        Ok((res.loss, res.outputs))
    }

    /// Symmetric update: each batch item's partners are pulled towards the
    /// item's pre-update output. Returns `None` when no partner was found.
    pub fn sym_train_step<R: Rng + ?Sized>(
        &mut self,
        env: &E,
        batch: &[usize],
        fixed_targets: &[f64],
        rng: &mut R,
    ) -> Result<Option<f64>, AgentError> {
        let Some(detector) = &self.detector else { return Ok(None) };
        let index = detector.index();
        if index.is_empty() {
            return Ok(None);
        }
        let mut items: Vec<(&E::State, usize)> = Vec::new();
        let mut targets = Vec::new();
        for (&i, &target) in batch.iter().zip(fixed_targets) {
            let t = self.replay.get(i);
            let partners = index.partners(&env.key(&t.state, t.action));
            if partners.is_empty() {
                continue;
            }
            let k = self.config.partners_per_item.min(partners.len());
            let chosen: Vec<usize> =
                if k == partners.len() { (0..k).collect() } else { sample(rng, partners.len(), k).into_vec() };
            for j in chosen {
                let key = partners[j].0;
                if let Some(rep) = index.representative(&key) {
                    items.push((rep, key.action()));
                    targets.push(target);
                }
            }
        }
        if items.is_empty() {
            return Ok(None);
        }
        let select: Vec<usize> = match self.layout {
            QLayout::PerAction => items.iter().map(|&(_, a)| a).collect(),
            QLayout::ActionInput => vec![0; items.len()],
        };
        let x = self.encode_rows(env, items.into_iter());
        let res = self.net.selected_mse(x.view(), &select, &targets)?;
        if !res.loss.is_finite() {
            return Err(AgentError::NonFiniteLoss { what: "symmetric", updates: self.updates });
        }
        self.net.apply_update(&res.grads, self.config.learning_rate, self.config.lambda_sym)?;
        Ok(Some(res.loss))
    }

    /// Samples a minibatch and applies the TD update, then the symmetric
    /// update when enabled. `None` if the replay is still too small.
    pub fn train_step<R: Rng + ?Sized>(&mut self, env: &E, rng: &mut R) -> Result<Option<StepLosses>, AgentError> {
        let Some(batch) = self.replay.sample(self.config.batch_size, rng) else { return Ok(None) };
        let (td, outputs) = self.dqn_train_step(env, &batch)?;
        let sym = if self.config.lambda_sym > 0.0 { self.sym_train_step(env, &batch, &outputs, rng)? } else { None };
        Ok(Some(StepLosses { td, sym }))
    }

    /// ε for the agent's next episode.
    pub fn current_epsilon(&self) -> f64 {
        match self.episodes.checked_sub(self.config.warmup_episodes) {
            None => 1.0,
            Some(e) => self.config.epsilon.at(e),
        }
    }

    /// Plays one episode, training after every step once warmup is over,
    /// then feeds the episode's reward trails to the detector.
    pub fn run_episode<R: Rng + ?Sized>(&mut self, env: &mut E, rng: &mut R) -> Result<EpisodeStats, AgentError> {
        let start = Instant::now();
        let warmup = self.episodes < self.config.warmup_episodes;
        let epsilon = self.current_epsilon();
        let mut state = env.reset(rng);
        let mut stats = EpisodeStats {
            episode: self.episodes,
            warmup,
            base_reward: 0.0,
            shaped_reward: 0.0,
            steps: 0,
            epsilon,
            td_loss: 0.0,
            sym_loss: 0.0,
            updates: 0,
            sym_updates: 0,
            partner_pairs: 0,
            wall_ms: 0.0,
        };
        let mut keys: Vec<SaKey> = Vec::new();
        let mut rewards: Vec<f64> = Vec::new();
        loop {
            let action = if epsilon >= 1.0 {
                select_action(&vec![0.0; self.action_count], 1.0, rng)
            } else {
                select_action(&self.q_values(env, &state)?, epsilon, rng)
            };
            let step = env.step(action, rng)?;
            if let Some(detector) = &mut self.detector {
                let key = env.key(&state, action);
                detector.observe(key, state.clone());
                keys.push(key);
                rewards.push(step.shaped_reward);
            }
            stats.base_reward += step.base_reward;
            stats.shaped_reward += step.shaped_reward;
            stats.steps += 1;
            self.replay.push(Transition {
                state,
                action,
                reward: step.shaped_reward,
                next_state: step.next_state.clone(),
                terminated: step.terminated,
            });
            if !warmup {
                if let Some(losses) = self.train_step(env, rng)? {
                    stats.updates += 1;
                    stats.td_loss += losses.td;
                    if let Some(l) = losses.sym {
                        stats.sym_updates += 1;
                        stats.sym_loss += l;
                    }
                }
            }
            state = step.next_state;
            if step.terminated || step.truncated {
                break;
            }
        }
        if stats.updates > 0 {
            stats.td_loss /= stats.updates as f64;
        }
        if stats.sym_updates > 0 {
            stats.sym_loss /= stats.sym_updates as f64;
        }
        if let Some(detector) = &mut self.detector {
            detector.end_episode(&keys, &rewards)?;
            stats.partner_pairs = detector.index().pair_count();
        }
        self.episodes += 1;
        stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(stats)
    }
}
