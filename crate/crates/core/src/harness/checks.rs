use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stats::welch_t_test;
use crate::envs::{CartPoleConfig, GridPos, GridWorldConfig, Potential, Push};
use crate::mdp::{build_quotient, check_symmetry, equivalence_classes, value_iteration};
use crate::neural::Mlp;
use crate::symmetry::oracle::{brute_force_similarity, Trace};
use crate::symmetry::{compute_similarities, similarity, RewardHistoryTree, SaKey, DEFAULT_QUANTUM};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn similarity_matches_enumeration() -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    let mut missing = 0;
    for _ in 0..10 {
        let keys: Vec<SaKey> = (0..6).map(|k| SaKey::new(&[k / 2], (k % 2) as usize)).collect();
        let traces: Vec<Trace> = (0..10)
            .map(|_| {
                let len = rng.random_range(1..12);
                Trace {
                    keys: (0..len).map(|_| keys[rng.random_range(0..keys.len())]).collect(),
                    rewards: (0..len).map(|_| rng.random_range(-1..=1) as f64).collect(),
                }
            })
            .collect();
        for (l0, i) in [(1, 2), (2, 5)] {
            let mut tree = RewardHistoryTree::new(i, DEFAULT_QUANTUM).expect("valid depth");
            for t in &traces {
                tree.insert_episode(&t.keys, &t.rewards).expect("finite rewards");
            }
            let table = compute_similarities(&tree, l0, i).expect("valid lengths");
            for a in &keys {
                for b in &keys {
                    match (similarity(&table, a, b), brute_force_similarity(&traces, a, b, l0, i, DEFAULT_QUANTUM)) {
                        (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
                        (None, None) => {}
                        _ => missing += 1,
                    }
                }
            }
        }
    }
    outcome("similarity vs enumeration", worst <= 1e-12 && missing == 0, format!("max |diff| {worst:.2e}"))
}

fn gradients_match_finite_differences() -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for sizes in [[85, 120, 40, 1], [4, 100, 100, 2]] {
        let mut net = Mlp::<f64>::init(&sizes, rng.random()).expect("valid sizes");
        let x = Array2::from_shape_fn((3, sizes[0]), |_| rng.random_range(-1.0..1.0));
        let select: Vec<usize> = (0..3).map(|_| rng.random_range(0..sizes[3])).collect();
        let targets: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let analytic = net.selected_mse(x.view(), &select, &targets).expect("shapes match").grads;
        let analytic: Vec<f64> = analytic.values().collect();
        let h = 1e-5;
        for idx in (0..analytic.len()).step_by(97) {
            let mut eval = |delta: f64| {
                let (l, k) = locate(&net, idx);
                let layer = &mut net.layers_mut()[l];
                let cell = if k < layer.weights.len() {
                    &mut layer.weights.as_slice_mut().expect("standard layout")[k]
                } else {
                    &mut layer.bias.as_slice_mut().expect("standard layout")[k - layer.weights.len()]
                };
                *cell += delta;
                let loss = net.selected_mse(x.view(), &select, &targets).expect("shapes match").loss;
                let (l, k) = locate(&net, idx);
                let layer = &mut net.layers_mut()[l];
                let cell = if k < layer.weights.len() {
                    &mut layer.weights.as_slice_mut().expect("standard layout")[k]
                } else {
                    &mut layer.bias.as_slice_mut().expect("standard layout")[k - layer.weights.len()]
                };
                *cell -= delta;
                loss
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let err = (numeric - analytic[idx]).abs() / numeric.abs().max(analytic[idx].abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    outcome("gradient vs finite differences", worst < 1e-4, format!("max relative error {worst:.2e}"))
}

/// Layer and offset (weights first, then bias) of flat parameter `idx`.
fn locate(net: &Mlp<f64>, mut idx: usize) -> (usize, usize) {
    for (l, layer) in net.layers().iter().enumerate() {
        let n = layer.weights.len() + layer.bias.len();
        if idx < n {
            return (l, idx);
        }
        idx -= n;
    }
    panic!("parameter index out of range")
}

fn shaping_keeps_policy() -> CheckOutcome {
    let base = GridWorldConfig { size: 5, goal: GridPos::new(&[2, 4]), ..Default::default() };
    let q0 = value_iteration(&base.tabular().expect("valid grid"), 0.9, 1e-12).expect("converges");
    let mut same = true;
    for kind in [Potential::Distance, Potential::DiscountedDistance] {
        for sign in [1.0, -1.0] {
            let cfg = GridWorldConfig { shaping: Some(kind), potential_sign: sign, ..base.clone() };
            let q1 = value_iteration(&cfg.tabular().expect("valid grid"), 0.9, 1e-12).expect("converges");
            same &= (0..25).all(|s| q0.greedy_set(s, 1e-8) == q1.greedy_set(s, 1e-8));
        }
    }
    outcome("shaping keeps greedy actions", same, "5x5, Pot1/Pot2, both signs".into())
}

fn quotient_solves_grid() -> CheckOutcome {
    let cfg = GridWorldConfig { size: 3, goal: GridPos::new(&[2, 2]), ..Default::default() };
    let mdp = cfg.tabular().expect("valid grid");
    let sym = cfg.reflection(0).expect("valid map");
    let ok = check_symmetry(&mdp, &sym, 1e-9).expect("same sizes");
    let classes = equivalence_classes(&mdp, &sym).expect("is a symmetry");
    let quotient = build_quotient(&mdp, &classes, 1e-9).expect("consistent");
    let full = value_iteration(&mdp, 0.9, 1e-12).expect("converges");
    let lifted = quotient.lift(&value_iteration(&quotient.mdp, 0.9, 1e-12).expect("converges"));
    let gap = full.sup_distance(&lifted);
    outcome("quotient solution lifts", ok && gap <= 1e-6, format!("sup gap {gap:.2e}"))
}

fn welch_reference() -> CheckOutcome {
    let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).expect("valid samples");
    let ok = (r.t + 1.0).abs() < 1e-12 && (r.dof - 8.0).abs() < 1e-12 && (r.p - 0.3466).abs() < 1e-3;
    outcome("welch t-test example", ok, format!("t {:.4}, dof {:.4}, p {:.4}", r.t, r.dof, r.p))
}

fn cartpole_mirror() -> CheckOutcome {
    let cfg = CartPoleConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ok = (0..1000).all(|_| {
        let s: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        cfg.dynamics(&s.map(|v| -v), Push::Left) == cfg.dynamics(&s, Push::Right).map(|v| -v)
    });
    outcome("cart-pole mirror symmetry", ok, "1000 random states".into())
}

/// Fast oracle and invariant checks over the library.
pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        similarity_matches_enumeration(),
        gradients_match_finite_differences(),
        shaping_keeps_policy(),
        quotient_solves_grid(),
        welch_reference(),
        cartpole_mirror(),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
