use rand::Rng;

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy choice over `q_values`. One uniform draw decides exploration,
/// a second picks the random action.
pub fn select_action<R: Rng + ?Sized>(q_values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    assert!(!q_values.is_empty(), "no actions to choose from");
    if rng.random::<f64>() < epsilon {
        rng.random_range(0..q_values.len())
    } else {
        argmax(q_values)
    }
}

/// `ε(e) = max(floor, start · rate^e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub floor: f64,
    pub rate: f64,
}

impl EpsilonSchedule {
    pub fn constant(epsilon: f64) -> Self {
        EpsilonSchedule { start: epsilon, floor: epsilon, rate: 1.0 }
    }

    pub fn at(&self, episode: usize) -> f64 {
        epsilon_at(self, episode)
    }
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule { start: 1.0, floor: 0.1, rate: 0.98 }
    }
}

pub fn epsilon_at(schedule: &EpsilonSchedule, episode: usize) -> f64 {
    let e = i32::try_from(episode).unwrap_or(i32::MAX);
    schedule.floor.max(schedule.start * schedule.rate.powi(e))
}
