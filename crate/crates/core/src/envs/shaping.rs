/// Grid-world potentials over the L1 distance `d` to the goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    /// `Θ = d`
    Distance,
    /// `Θ = d · γ^d`
    DiscountedDistance,
}

fn l1(state: &[i32], goal: &[i32]) -> f64 {
    state.iter().zip(goal).map(|(s, g)| (s - g).abs()).sum::<i32>() as f64
}

pub fn potential(kind: Potential, state: &[i32], goal: &[i32], gamma: f64) -> f64 {
    let d = l1(state, goal);
    match kind {
        Potential::Distance => d,
        Potential::DiscountedDistance => d * gamma.powf(d),
    }
}

/// Potential-based shaping term `F = γ Θ(s') − Θ(s)`, with the potential
/// multiplied by `sign` (±1) first.
pub fn potential_shaping(kind: Potential, s: &[i32], s_next: &[i32], goal: &[i32], gamma: f64, sign: f64) -> f64 {
    sign * (gamma * potential(kind, s_next, goal, gamma) - potential(kind, s, goal, gamma))
}

/// Cart-pole state bonus `1 − Σ k² / (L − 1)²` over discretized indices.
pub fn cartpole_shaping(indices: [i32; 4], levels: usize) -> f64 {
    let span = (levels as f64 - 1.0).powi(2);
    1.0 - indices.iter().map(|&k| (k * k) as f64).sum::<f64>() / span
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn potentials() {
        assert_eq!(potential(Potential::Distance, &[2, 1], &[6, 1], 0.9), 4.0);
        assert!((potential(Potential::DiscountedDistance, &[1, 1], &[2, 2], 0.9) - 1.62).abs() < 1e-12);
        assert_eq!(potential(Potential::Distance, &[6, 1], &[6, 1], 0.9), 0.0);
        assert_eq!(potential(Potential::DiscountedDistance, &[3, 3, 3], &[3, 3, 3], 0.9), 0.0);
        // Same formula in three dimensions.
        let d3 = potential(Potential::DiscountedDistance, &[1, 2, 3], &[2, 2, 2], 0.9);
        assert!((d3 - 2.0 * 0.81).abs() < 1e-12);
    }

    #[test]
    fn shaping_examples() {
        let f = potential_shaping(Potential::Distance, &[2, 1], &[3, 1], &[6, 1], 0.9, 1.0);
        assert!((f - (0.9 * 3.0 - 4.0)).abs() < 1e-12);
        assert_eq!(potential_shaping(Potential::DiscountedDistance, &[4, 4], &[4, 4], &[1, 1], 1.0, 1.0), 0.0);
        assert!((potential_shaping(Potential::Distance, &[2, 1], &[3, 1], &[6, 1], 0.9, -1.0) - 1.3).abs() < 1e-12);
    }

    #[test]
    fn cartpole_bonus() {
        assert_eq!(cartpole_shaping([0, 0, 0, 0], 9), 1.0);
        assert_eq!(cartpole_shaping([4, 4, 4, 4], 9), 0.0);
        assert_eq!(cartpole_shaping([1, -2, 0, 3], 9), 1.0 - 14.0 / 64.0);
    }

    proptest! {
        #[test]
        fn shaping_telescopes(
            path in proptest::collection::vec((1i32..8, 1i32..8), 2..20),
            gamma in 0.5f64..1.0,
            pot2 in any::<bool>(),
        ) {
            let kind = if pot2 { Potential::DiscountedDistance } else { Potential::Distance };
            let goal = [4, 5];
            let states: Vec<[i32; 2]> = path.iter().map(|&(x, y)| [x, y]).collect();
            let total: f64 = states.windows(2).enumerate()
                .map(|(t, w)| gamma.powi(t as i32) * potential_shaping(kind, &w[0], &w[1], &goal, gamma, 1.0))
                .sum();
            let last = states.len() - 1;
            let expected = gamma.powi(last as i32) * potential(kind, &states[last], &goal, gamma)
                - potential(kind, &states[0], &goal, gamma);
            prop_assert!((total - expected).abs() < 1e-9);
        }

        #[test]
        fn cartpole_bonus_is_even(k in proptest::array::uniform4(-4i32..=4)) {
            prop_assert_eq!(cartpole_shaping(k, 9), cartpole_shaping(k.map(|x| -x), 9));
            prop_assert!(cartpole_shaping(k, 9) <= 1.0);
        }
    }
}
