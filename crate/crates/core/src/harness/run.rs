use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{EnvSpec, ExperimentConfig};
use super::HarnessError;
use crate::agents::{argmax, Agent, EpisodeStats};
use crate::envs::{CartPole, Environment, GridPos, GridWorld, GridWorldConfig, Move};
use crate::mdp::value_iteration;

pub const EPISODE_SCHEMA: &str = "# symrl-episodes v1";
pub const RUNS_SCHEMA: &str = "# symrl-runs v1";

/// Noise-free greedy rollout lengths from every non-goal start (`None` when
/// the goal was not reached within the episode step limit), plus the start
/// drawn for this evaluation episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GreedyEval {
    pub steps: Vec<Option<usize>>,
    pub start: usize,
}

fn near_optimal(steps: Option<usize>, optimal: usize, tolerance: f64) -> bool {
    steps.map_or(f64::INFINITY, |s| s as f64) <= tolerance * optimal as f64
}

impl GreedyEval {
    /// The evaluation episode from `start` reaches the goal within
    /// `tolerance × optimal` steps.
    pub fn passed(&self, optimal: &[usize], tolerance: f64) -> bool {
        near_optimal(self.steps[self.start], optimal[self.start], tolerance)
    }

    /// Starts whose rollout is within `tolerance × optimal` steps.
    pub fn count_within(&self, optimal: &[usize], tolerance: f64) -> usize {
        self.steps
            .iter()
            .zip(optimal)
            .filter(|(s, &opt)| near_optimal(**s, opt, tolerance))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub goal: Option<GridPos>,
    pub episodes: Vec<EpisodeStats>,
    /// One entry per learning episode (grid worlds only).
    pub evals: Vec<GreedyEval>,
    /// Oracle shortest greedy path length per non-goal start (grid worlds only).
    pub optimal_steps: Vec<usize>,
    pub convergence_episode: Option<usize>,
    pub wall_ms: f64,
}

impl RunRecord {
    pub fn learning_episodes(&self) -> impl Iterator<Item = &EpisodeStats> {
        self.episodes.iter().filter(|e| !e.warmup)
    }
}

/// First learning episode `e` such that the evaluation episodes
/// `e .. e + window` all pass; `None` if there is no such run.
pub fn convergence_episode(evals: &[GreedyEval], optimal_steps: &[usize], tolerance: f64, window: usize) -> Option<usize> {
    let mut streak = 0;
    for (e, ev) in evals.iter().enumerate() {
        if ev.passed(optimal_steps, tolerance) {
            streak += 1;
            if streak == window {
                return Some(e + 1 - window);
            }
        } else {
            streak = 0;
        }
    }
    None
}

fn rollout(cfg: &GridWorldConfig, start: GridPos, policy: impl Fn(&GridPos) -> usize) -> Option<usize> {
    let mut pos = start;
    let mut steps = 0;
    while pos != cfg.goal {
        if steps >= cfg.max_steps {
            return None;
        }
        pos = cfg.transition(&pos, policy(&pos), Move::Intended);
        steps += 1;
    }
    Some(steps)
}

fn non_goal_starts(cfg: &GridWorldConfig) -> Vec<GridPos> {
    (0..cfg.state_count()).map(|s| cfg.pos_of(s)).filter(|p| *p != cfg.goal).collect()
}

/// Greedy path lengths of the optimal policy of the unshaped grid, from
/// every non-goal start.
pub fn optimal_steps(cfg: &GridWorldConfig, gamma: f64) -> Result<Vec<usize>, HarnessError> {
    let base = GridWorldConfig { shaping: None, ..cfg.clone() };
    let q = value_iteration(&base.tabular()?, gamma, 1e-12)?;
    let policy = |p: &GridPos| q.greedy_set(base.index_of(p), 1e-9)[0];
    non_goal_starts(&base)
        .into_iter()
        .map(|s| rollout(&base, s, policy).ok_or_else(|| HarnessError::Config("goal unreachable".into())))
        .collect()
}

/// Greedy rollouts of `agent` from every start; `start` picks the one that
/// counts as this episode's evaluation.
pub fn greedy_eval(agent: &Agent<GridWorld>, env: &GridWorld, start: usize) -> Result<GreedyEval, HarnessError> {
    let cfg = env.config();
    let states: Vec<GridPos> = (0..cfg.state_count()).map(|s| cfg.pos_of(s)).collect();
    let refs: Vec<&GridPos> = states.iter().collect();
    let q = agent.q_matrix(agent.net(), env, &refs)?;
    let actions: Vec<usize> = q.rows().into_iter().map(|r| argmax(r.as_slice().expect("contiguous rows"))).collect();
    let steps = non_goal_starts(cfg).into_iter().map(|s| rollout(cfg, s, |p| actions[cfg.index_of(p)])).collect();
    Ok(GreedyEval { steps, start })
}

fn train<E: Environment>(
    mut env: E,
    agent: &mut Agent<E>,
    total_episodes: usize,
    rng: &mut ChaCha8Rng,
    mut after_episode: impl FnMut(&Agent<E>, &E, &EpisodeStats) -> Result<(), HarnessError>,
) -> Result<Vec<EpisodeStats>, HarnessError> {
    let mut out = Vec::with_capacity(total_episodes);
    for _ in 0..total_episodes {
        let stats = agent.run_episode(&mut env, rng)?;
        after_episode(agent, &env, &stats)?;
        out.push(stats);
    }
    Ok(out)
}

/// Trains run `k` of the experiment in memory.
pub fn run_single(config: &ExperimentConfig, k: usize) -> Result<RunRecord, HarnessError> {
    let start = Instant::now();
    let seed = config.seed.wrapping_add(k as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agent_cfg = config.agent_config();
    let warmup = agent_cfg.warmup_episodes;
    let total = if config.episodes == 0 { 0 } else { warmup + config.episodes };
    let mut record = RunRecord {
        run: k,
        seed,
        goal: None,
        episodes: Vec::new(),
        evals: Vec::new(),
        optimal_steps: Vec::new(),
        convergence_episode: None,
        wall_ms: 0.0,
    };
    match &config.env {
        EnvSpec::Grid { config: grid, goal } => {
            let mut grid = grid.clone();
            grid.goal = match goal {
                Some(g) => *g,
                None => grid.pos_of(rng.random_range(0..grid.state_count())),
            };
            record.goal = Some(grid.goal);
            record.optimal_steps = optimal_steps(&grid, agent_cfg.gamma)?;
            let env = GridWorld::new(grid)?;
            let mut agent = Agent::new(&env, agent_cfg, rng.random())?;
            // Evaluation starts come from their own stream so training is
            // unaffected by evaluation.
            let mut eval_rng = ChaCha8Rng::seed_from_u64(rng.random());
            let starts = record.optimal_steps.len();
            let evals = &mut record.evals;
            record.episodes = train(env, &mut agent, total, &mut rng, |agent, env, stats| {
                if !stats.warmup {
                    evals.push(greedy_eval(agent, env, eval_rng.random_range(0..starts))?);
                }
                Ok(())
            })?;
            record.convergence_episode =
                convergence_episode(&record.evals, &record.optimal_steps, config.eval.tolerance, config.eval.window);
        }
        EnvSpec::CartPole(cp) => {
            let env = CartPole::new(cp.clone())?;
            let mut agent = Agent::new(&env, agent_cfg, rng.random())?;
            record.episodes = train(env, &mut agent, total, &mut rng, |_, _, _| Ok(()))?;
        }
    }
    record.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EpisodeRow {
    episode: usize,
    warmup: u8,
    base_reward: f64,
    shaped_reward: f64,
    steps: usize,
    epsilon: f64,
    td_loss: f64,
    sym_loss: f64,
    updates: usize,
    sym_updates: usize,
    partner_pairs: usize,
    /// Evaluation episode reached the goal near-optimally (grid worlds).
    greedy_ok: Option<u8>,
    /// Starts from which the greedy rollout is near-optimal (grid worlds).
    greedy_within: Option<usize>,
}

/// One line of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub goal: String,
    pub episodes: usize,
    /// Whether the greedy policy converged; empty when not evaluated.
    pub converged: Option<u8>,
    /// Convergence episode, or `episodes` for runs that never converged.
    pub convergence_episode: Option<usize>,
    pub mean_total_reward: Option<f64>,
    pub max_total_reward: Option<f64>,
}

impl RunSummary {
    pub fn of(record: &RunRecord, config: &ExperimentConfig) -> Self {
        let rewards: Vec<f64> = record.learning_episodes().map(|e| e.base_reward).collect();
        let evaluated = matches!(config.env, EnvSpec::Grid { .. }) && config.episodes > 0;
        let dims = match &config.env {
            EnvSpec::Grid { config, .. } => config.dims,
            EnvSpec::CartPole(_) => 0,
        };
        RunSummary {
            run: record.run,
            seed: record.seed,
            goal: record.goal.map_or(String::new(), |g| {
                g.coords(dims).iter().map(i32::to_string).collect::<Vec<_>>().join(" ")
            }),
            episodes: rewards.len(),
            converged: evaluated.then_some(record.convergence_episode.is_some() as u8),
            convergence_episode: evaluated.then_some(record.convergence_episode.unwrap_or(config.episodes)),
            mean_total_reward: (!rewards.is_empty()).then(|| rewards.iter().sum::<f64>() / rewards.len() as f64),
            max_total_reward: rewards.iter().copied().reduce(f64::max),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn write_run_csv(dir: &Path, record: &RunRecord, config: &ExperimentConfig) -> Result<(), HarnessError> {
    let path = dir.join(format!("run_{:03}.csv", record.run));
    let mut file = File::create(&path).map_err(io_err(&path))?;
    writeln!(file, "{EPISODE_SCHEMA}").map_err(io_err(&path))?;
    let mut w = csv::Writer::from_writer(file);
    let warmup = config.agent.warmup_episodes.min(record.episodes.len());
    for (i, e) in record.episodes.iter().enumerate() {
        let eval = if e.warmup { None } else { record.evals.get(i - warmup) };
        let tol = config.eval.tolerance;
        let greedy_ok = eval.map(|ev| ev.passed(&record.optimal_steps, tol) as u8);
        let greedy_within = eval.map(|ev| ev.count_within(&record.optimal_steps, tol));
        w.serialize(EpisodeRow {
            episode: e.episode,
            warmup: e.warmup as u8,
            base_reward: e.base_reward,
            shaped_reward: e.shaped_reward,
            steps: e.steps,
            epsilon: e.epsilon,
            td_loss: e.td_loss,
            sym_loss: e.sym_loss,
            updates: e.updates,
            sym_updates: e.sym_updates,
            partner_pairs: e.partner_pairs,
            greedy_ok,
            greedy_within,
        })?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

fn write_timing(dir: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let path = dir.join("timing.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["run", "episode", "steps", "wall_ms"])?;
    for r in records {
        for e in &r.episodes {
            w.write_record([r.run.to_string(), e.episode.to_string(), e.steps.to_string(), e.wall_ms.to_string()])?;
        }
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

fn write_runs(dir: &Path, records: &[RunRecord], config: &ExperimentConfig) -> Result<(), HarnessError> {
    let path = dir.join("runs.csv");
    let mut file = File::create(&path).map_err(io_err(&path))?;
    writeln!(file, "{RUNS_SCHEMA}").map_err(io_err(&path))?;
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(RunSummary::of(r, config))?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(())
}

fn write_manifest(dir: &Path, config: &ExperimentConfig) -> Result<(), HarnessError> {
    let text = config.to_text();
    let hash = format!("{:x}", Sha256::digest(text.as_bytes()));
    let last = config.seed.wrapping_add(config.iterations as u64 - 1);
    let manifest = format!(
        "schema = 1\nversion = {}\nconfig_sha256 = {hash}\nruns = {}\nseeds = {}..={last}\n\n[config]\n{text}",
        env!("CARGO_PKG_VERSION"),
        config.iterations,
        config.seed,
    );
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(io_err(&path))
}

/// Runs every seed of the experiment. With an output directory, writes one
/// CSV per run as it finishes, then `runs.csv`, `timing.csv` and the
/// manifest. A failed run stops the experiment; files already written stay.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>, HarnessError> {
    config.validate()?;
    let dir: Option<PathBuf> = config.output_dir.clone();
    if let Some(dir) = &dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        write_manifest(dir, config)?;
    }
    let finish = |k: usize| -> Result<RunRecord, HarnessError> {
        let record = run_single(config, k).map_err(|e| HarnessError::RunFailed { run: k, source: Box::new(e) })?;
        if let Some(dir) = &dir {
            write_run_csv(dir, &record, config)?;
        }
        log::info!(
            "run {k}: {} episodes, convergence {:?}, {:.1}s",
            record.episodes.len(),
            record.convergence_episode,
            record.wall_ms / 1e3
        );
        Ok(record)
    };

    let mut records: Vec<RunRecord> = if config.threads <= 1 {
        (0..config.iterations).map(finish).collect::<Result<_, _>>()?
    } else {
        let next = AtomicUsize::new(0);
        let results = Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for _ in 0..config.threads.min(config.iterations) {
                scope.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    if k >= config.iterations {
                        break;
                    }
                    let r = finish(k);
                    let failed = r.is_err();
                    results.lock().unwrap().push(r);
                    if failed {
                        next.store(config.iterations, Ordering::SeqCst);
                    }
                });
            }
        });
        results.into_inner().unwrap().into_iter().collect::<Result<_, _>>()?
    };
    records.sort_by_key(|r| r.run);
    if let Some(dir) = &dir {
        write_runs(dir, &records, config)?;
        write_timing(dir, &records)?;
    }
    Ok(records)
}

pub fn read_runs(dir: &Path) -> Result<Vec<RunSummary>, HarnessError> {
    let path = dir.join("runs.csv");
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
