use rand::Rng;

use super::types::{Step, TabularMdp, TabularPolicy, Trajectory};
use crate::error::{OpeError, Result};
use crate::rng::{derive_seed, rng_from_seed, OpeRng};

/// Inverse-CDF draw from a dense probability vector.
pub(crate) fn sample_index(rng: &mut OpeRng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Inverse-CDF draw from a sparse `(index, probability)` list.
pub(crate) fn sample_sparse(rng: &mut OpeRng, entries: &[(usize, f64)]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for &(i, p) in entries {
        acc += p;
        if u < acc {
            return i;
        }
    }
    entries.last().map_or(0, |&(i, _)| i)
}

/// Rolls out `num_traj` trajectories of exactly `horizon` steps each, all
/// labeled 0. The same seed always yields the same trajectories.
pub fn sample_trajectories(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    num_traj: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    sample_labeled(mdp, policy, 0, num_traj, horizon, seed)
}

/// Like [`sample_trajectories`] with an explicit behavior label.
pub fn sample_labeled(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    label: usize,
    num_traj: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if num_traj == 0 || horizon == 0 {
        return Err(OpeError::InvalidInput("need at least one trajectory of at least one step".into()));
    }
    if !policy.matches(mdp) {
        return Err(OpeError::InvalidInput("policy shape does not match MDP".into()));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..num_traj)
        .map(|_| {
            let mut state = sample_index(&mut rng, mdp.initial_dist());
            let steps = (0..horizon)
                .map(|_| {
                    let action = sample_index(&mut rng, policy.row(state));
                    let next_state = sample_sparse(&mut rng, mdp.transitions(state, action));
                    let step = Step { state, action, reward: mdp.reward(state, action), next_state };
                    state = next_state;
                    step
                })
                .collect();
            Trajectory { steps, policy_label: label }
        })
        .collect())
}

/// Splits `num_traj` trajectories as evenly as possible across `behaviors`
/// (earlier behaviors take the remainder) and labels each by its index.
pub fn sample_multi_behavior(
    mdp: &TabularMdp,
    behaviors: &[TabularPolicy],
    num_traj: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    if behaviors.is_empty() {
        return Err(OpeError::InvalidInput("no behavior policies".into()));
    }
    let m = behaviors.len();
    let mut out = Vec::with_capacity(num_traj);
    for (j, pi) in behaviors.iter().enumerate() {
        let count = num_traj / m + usize::from(j < num_traj % m);
        if count == 0 {
            continue;
        }
        out.extend(sample_labeled(mdp, pi, j, count, horizon, derive_seed(seed, &[j as u64]))?);
    }
    Ok(out)
}
