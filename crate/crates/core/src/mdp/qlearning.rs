use rand::Rng;

use super::simulate::{sample_index, sample_sparse};
use super::types::{TabularMdp, TabularPolicy};
use crate::error::{OpeError, Result};
use crate::rng::rng_from_seed;

/// Tabular Q-learning hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QLearningParams {
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for QLearningParams {
    fn default() -> Self {
        Self { episodes: 500, steps_per_episode: 200, epsilon: 0.1, alpha: 0.1, gamma: 0.95 }
    }
}

impl QLearningParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon > 0.0
            && self.epsilon < 1.0
            && self.alpha > 0.0
            && self.alpha <= 1.0
            && self.gamma > 0.0
            && self.gamma < 1.0
            && self.steps_per_episode > 0;
        if ok {
            Ok(())
        } else {
            Err(OpeError::InvalidInput(format!("invalid Q-learning parameters {self:?}")))
        }
    }
}

/// Q-table indexed `s * A + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    pub num_states: usize,
    pub num_actions: usize,
    pub values: Vec<f64>,
}

impl QTable {
    /// Greedy action, ties broken by the lowest index.
    pub fn greedy_action(&self, s: usize) -> usize {
        argmax_lowest(&self.values[s * self.num_actions..(s + 1) * self.num_actions])
    }

    pub fn greedy_policy(&self) -> TabularPolicy {
        let actions: Vec<usize> = (0..self.num_states).map(|s| self.greedy_action(s)).collect();
        TabularPolicy::deterministic(self.num_actions, &actions).expect("greedy actions are in range")
    }
}

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &q) in row.iter().enumerate().skip(1) {
        if q > row[best] {
            best = a;
        }
    }
    best
}

/// Epsilon-greedy Q-learning over fixed-length episodes from the MDP's
/// initial distribution.
pub fn train_q_table(mdp: &TabularMdp, params: &QLearningParams, seed: u64) -> Result<QTable> {
    params.validate()?;
    let (n, m) = (mdp.num_states(), mdp.num_actions());
    let mut q = vec![0.0; n * m];
    let mut rng = rng_from_seed(seed);
    for _ in 0..params.episodes {
        let mut s = sample_index(&mut rng, mdp.initial_dist());
        for _ in 0..params.steps_per_episode {
            let a = if rng.gen::<f64>() < params.epsilon {
                rng.gen_range(0..m)
            } else {
                argmax_lowest(&q[s * m..(s + 1) * m])
            };
            let next = sample_sparse(&mut rng, mdp.transitions(s, a));
            let best_next = q[next * m..(next + 1) * m].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let target = mdp.reward(s, a) + params.gamma * best_next;
            q[s * m + a] += params.alpha * (target - q[s * m + a]);
            s = next;
        }
    }
    Ok(QTable { num_states: n, num_actions: m, values: q })
}

/// Trains a Q-table and returns its epsilon-softened greedy policy
/// `(1 - ε)·1{a = argmax Q} + ε/|A|`.
pub fn train_q_learning_policy(mdp: &TabularMdp, params: &QLearningParams, seed: u64) -> Result<TabularPolicy> {
    let table = train_q_table(mdp, params, seed)?;
    soften_policy(&table.greedy_policy(), params.epsilon)
}

/// Mixes a policy with the uniform one: `(1 - ε)·π + ε·uniform`.
pub fn soften_policy(policy: &TabularPolicy, epsilon: f64) -> Result<TabularPolicy> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(OpeError::InvalidInput(format!("softening epsilon {epsilon} outside [0, 1]")));
    }
    let uniform = epsilon / policy.num_actions() as f64;
    let probs = policy.probs().iter().map(|&p| (1.0 - epsilon) * p + uniform).collect();
    Ok(TabularPolicy::from_raw(policy.num_states(), policy.num_actions(), probs))
}
