use rand::Rng;

use super::types::{TabularMdp, TabularPolicy};
use crate::rng::rng_from_seed;

/// Random MDP with every transition probability bounded away from zero, so
/// every policy induces an ergodic chain. Rewards are uniform on `[-1, 1]`.
pub fn random_mdp(num_states: usize, num_actions: usize, seed: u64) -> TabularMdp {
    let mut rng = rng_from_seed(seed);
    let mut transitions = Vec::with_capacity(num_states * num_actions);
    for _ in 0..num_states * num_actions {
        let raw: Vec<f64> = (0..num_states).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        transitions.push(raw.into_iter().enumerate().map(|(s, p)| (s, p / total)).collect());
    }
    let rewards = (0..num_states * num_actions).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let initial = vec![1.0 / num_states as f64; num_states];
    TabularMdp::new(num_states, num_actions, transitions, rewards, initial).expect("random rows are stochastic")
}

/// Random policy with strictly positive rows.
pub fn random_policy(num_states: usize, num_actions: usize, seed: u64) -> TabularPolicy {
    let mut rng = rng_from_seed(seed);
    let mut probs = Vec::with_capacity(num_states * num_actions);
    for _ in 0..num_states {
        let raw: Vec<f64> = (0..num_actions).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        probs.extend(raw.into_iter().map(|p| p / total));
    }
    TabularPolicy::from_raw(num_states, num_actions, probs)
}
