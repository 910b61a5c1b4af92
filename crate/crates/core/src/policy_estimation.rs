//! Behavior-policy estimation from logged data, KL-based mixture weights and
//! the exact mixed-policy oracle.

use crate::error::{OpeError, Result};
use crate::mdp::{StateDistribution, TabularPolicy, TransitionDataset};

/// Floor applied to probabilities that appear in a denominator.
pub const PROB_FLOOR: f64 = 1e-12;

/// Nonnegative weights over behavior-policy labels that sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(OpeError::InvalidInput("weights must be finite, nonnegative and nonempty".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(OpeError::InvalidInput(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// `w_j = N_j / N` from per-label counts.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(OpeError::InvalidInput("no labeled records".into()));
        }
        Self::new(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Weighted count-frequency estimate of the policy behind `data`.
///
/// `π̂(a|s) = (Σ weight at (s,a) + smoothing) / (Σ weight at s + |A|·smoothing)`;
/// states without any weight fall back to the uniform row. With unit weights
/// and zero smoothing this is the maximum-likelihood estimate.
pub fn estimate_policy_mle_smoothed(
    data: &TransitionDataset,
    num_states: usize,
    num_actions: usize,
    smoothing: f64,
) -> Result<TabularPolicy> {
    if num_states == 0 || num_actions == 0 {
        return Err(OpeError::InvalidInput("empty state or action space".into()));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(OpeError::InvalidInput(format!("invalid smoothing {smoothing}")));
    }
    let mut counts = vec![0.0; num_states * num_actions];
    for r in data.records() {
        if r.state >= num_states || r.action >= num_actions {
            return Err(OpeError::InvalidInput(format!("record ({}, {}) out of range", r.state, r.action)));
        }
        counts[r.state * num_actions + r.action] += r.weight;
    }
    for row in counts.chunks_mut(num_actions) {
        let total: f64 = row.iter().sum::<f64>() + smoothing * num_actions as f64;
        if total > 0.0 {
            row.iter_mut().for_each(|c| *c = (*c + smoothing) / total);
        } else {
            row.iter_mut().for_each(|c| *c = 1.0 / num_actions as f64);
        }
    }
    Ok(TabularPolicy::from_raw(num_states, num_actions, counts))
}

/// Count-frequency maximum-likelihood policy estimate (no smoothing).
pub fn estimate_policy_mle(data: &TransitionDataset, num_states: usize, num_actions: usize) -> Result<TabularPolicy> {
    estimate_policy_mle_smoothed(data, num_states, num_actions, 0.0)
}

/// `KL(p || q)` with `0·ln(0/q) = 0` and `q` floored at [`PROB_FLOOR`].
pub fn kl_divergence_rows(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter()
        .zip(q)
        .filter(|(&pa, _)| pa > 0.0)
        .map(|(&pa, &qa)| pa * (pa / qa.max(PROB_FLOOR)).ln())
        .sum()
}

/// Share of `states` at which each behavior is the KL-closest to the target.
///
/// For each state the behavior minimizing `KL(π(·|s) || π_k(·|s))` gets one
/// vote (ties go to the lowest index); votes are divided by `|states|`.
pub fn compute_kl_weights(
    target: &TabularPolicy,
    behaviors: &[TabularPolicy],
    states: &[usize],
) -> Result<WeightVector> {
    if behaviors.is_empty() || states.is_empty() {
        return Err(OpeError::InvalidInput("KL weights need behaviors and states".into()));
    }
    let mut votes = vec![0usize; behaviors.len()];
    for &s in states {
        let mut best = 0;
        let mut best_kl = f64::INFINITY;
        for (k, pi_k) in behaviors.iter().enumerate() {
            let kl = kl_divergence_rows(target.row(s), pi_k.row(s));
            if kl < best_kl {
                best = k;
                best_kl = kl;
            }
        }
        votes[best] += 1;
    }
    WeightVector::new(votes.into_iter().map(|v| v as f64 / states.len() as f64).collect())
}

/// Distinct source states present in `data`, ascending.
pub fn visited_states(data: &TransitionDataset) -> Vec<usize> {
    let mut states: Vec<usize> = data.records().iter().map(|r| r.state).collect();
    states.sort_unstable();
    states.dedup();
    states
}

/// The mixed policy `π_0(a|s) = Σ_j [w_j d_j(s) / Σ_k w_k d_k(s)] π_j(a|s)`.
///
/// States where every weighted stationary mass vanishes get uniform rows.
pub fn exact_mixed_policy(
    behaviors: &[TabularPolicy],
    weights: &WeightVector,
    stationary_dists: &[StateDistribution],
) -> Result<TabularPolicy> {
    let m = behaviors.len();
    if m == 0 || weights.len() != m || stationary_dists.len() != m {
        return Err(OpeError::InvalidInput("behaviors, weights and distributions must have equal nonzero length".into()));
    }
    let (n, k) = (behaviors[0].num_states(), behaviors[0].num_actions());
    if behaviors.iter().any(|b| b.num_states() != n || b.num_actions() != k)
        || stationary_dists.iter().any(|d| d.len() != n)
    {
        return Err(OpeError::InvalidInput("mismatched behavior shapes".into()));
    }
    let w = weights.as_slice();
    let mut probs = vec![0.0; n * k];
    for s in 0..n {
        let mass: f64 = (0..m).map(|j| w[j] * stationary_dists[j].probs()[s]).sum();
        let row = &mut probs[s * k..(s + 1) * k];
        if mass > 0.0 {
            for j in 0..m {
                let h = w[j] * stationary_dists[j].probs()[s] / mass;
                for (a, p) in row.iter_mut().enumerate() {
                    *p += h * behaviors[j].prob(s, a);
                }
            }
        } else {
            row.iter_mut().for_each(|p| *p = 1.0 / k as f64);
        }
    }
    Ok(TabularPolicy::from_raw(n, k, probs))
}

/// Weight-normalized visit frequencies of the source state `s`.
pub fn empirical_state_distribution(data: &TransitionDataset, num_states: usize) -> Result<StateDistribution> {
    if data.is_empty() {
        return Err(OpeError::InvalidInput("empty dataset".into()));
    }
    let mut mass = vec![0.0; num_states];
    for r in data.records() {
        if r.state >= num_states {
            return Err(OpeError::InvalidInput(format!("state {} out of range", r.state)));
        }
        mass[r.state] += r.weight;
    }
    StateDistribution::normalized(mass)
}
