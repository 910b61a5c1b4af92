use std::collections::VecDeque;

use super::types::{StateDistribution, TabularMdp, TabularPolicy};
use crate::error::{OpeError, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

/// Sparse rows of the policy-induced state chain `P(s'|s) = Σ_a π(a|s) T(s'|s,a)`.
pub fn policy_chain(mdp: &TabularMdp, policy: &TabularPolicy) -> Vec<Vec<(usize, f64)>> {
    let mut scratch = vec![0.0; mdp.num_states()];
    let mut touched = Vec::new();
    (0..mdp.num_states())
        .map(|s| {
            for a in 0..mdp.num_actions() {
                let pa = policy.prob(s, a);
                if pa == 0.0 {
                    continue;
                }
                for &(next, p) in mdp.transitions(s, a) {
                    if scratch[next] == 0.0 {
                        touched.push(next);
                    }
                    scratch[next] += pa * p;
                }
            }
            touched.sort_unstable();
            let row = touched.iter().map(|&n| (n, std::mem::take(&mut scratch[n]))).collect();
            touched.clear();
            row
        })
        .collect()
}

fn step(chain: &[Vec<(usize, f64)>], d: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (s, row) in chain.iter().enumerate() {
        let mass = d[s];
        if mass == 0.0 {
            continue;
        }
        for &(next, p) in row {
            out[next] += mass * p;
        }
    }
}

/// True when every state can reach `anchor`, i.e. the chain has a single
/// closed class.
fn all_reach(chain: &[Vec<(usize, f64)>], anchor: usize) -> bool {
    let n = chain.len();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, row) in chain.iter().enumerate() {
        for &(next, p) in row {
            if p > 0.0 {
                reverse[next].push(s);
            }
        }
    }
    let mut seen = vec![false; n];
    seen[anchor] = true;
    let mut queue = VecDeque::from([anchor]);
    while let Some(s) = queue.pop_front() {
        for &prev in &reverse[s] {
            if !seen[prev] {
                seen[prev] = true;
                queue.push_back(prev);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Stationary state distribution of the chain induced by `policy`.
///
/// Runs lazy power iteration `d <- (d + dP) / 2` from the uniform vector,
/// which shares its fixed points with `P` and also converges on periodic
/// chains. Stops once `||dP - d||_1 <= tol`. A chain with more than one
/// closed class is rejected as `NonErgodicChain` even if iteration settles.
pub fn stationary_distribution(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    tol: f64,
    max_iters: usize,
) -> Result<StateDistribution> {
    if !policy.matches(mdp) {
        return Err(OpeError::InvalidInput("policy shape does not match MDP".into()));
    }
    let chain = policy_chain(mdp, policy);
    let n = mdp.num_states();
    let mut d = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for iteration in 0..=max_iters {
        step(&chain, &d, &mut next);
        residual = d.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            let anchor = (0..n).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap_or(0);
            if !all_reach(&chain, anchor) {
                return Err(OpeError::NonErgodicChain { residual, iterations: iteration });
            }
            let total: f64 = d.iter().sum();
            d.iter_mut().for_each(|x| *x /= total);
            return StateDistribution::new(d);
        }
        for (x, y) in d.iter_mut().zip(&next) {
            *x = 0.5 * (*x + y);
        }
    }
    Err(OpeError::NonErgodicChain { residual, iterations: max_iters })
}

/// Infinite-horizon average reward `Σ_{s,a} d_π(s) π(a|s) r(s,a)`.
pub fn average_reward(mdp: &TabularMdp, policy: &TabularPolicy) -> Result<f64> {
    let d = stationary_distribution(mdp, policy, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
    Ok(average_reward_under(mdp, policy, &d))
}

/// Average reward for an already computed stationary distribution.
pub fn average_reward_under(mdp: &TabularMdp, policy: &TabularPolicy, d: &StateDistribution) -> f64 {
    d.probs()
        .iter()
        .enumerate()
        .map(|(s, &ds)| ds * (0..mdp.num_actions()).map(|a| policy.prob(s, a) * mdp.reward(s, a)).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::envs::build_singlepath;

    fn two_state(flip: f64, rewards: [f64; 2]) -> TabularMdp {
        TabularMdp::from_dense(
            &[vec![vec![1.0 - flip, flip]], vec![vec![flip, 1.0 - flip]]],
            &[vec![rewards[0]], vec![rewards[1]]],
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn symmetric_two_state_chain_is_uniform() {
        let mdp = two_state(0.3, [0.0, 1.0]);
        let d = stationary_distribution(&mdp, &TabularPolicy::uniform(2, 1), DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-12);
        assert!((average_reward(&mdp, &TabularPolicy::uniform(2, 1)).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn periodic_chain_still_converges() {
        let mdp = two_state(1.0, [0.0, 1.0]);
        let d = stationary_distribution(&mdp, &TabularPolicy::uniform(2, 1), DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        assert!((d.probs()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rank_one_transition_returns_its_vector() {
        let q = [0.1, 0.6, 0.3];
        let t: Vec<Vec<Vec<f64>>> = (0..3).map(|_| vec![q.to_vec(), q.to_vec()]).collect();
        let r = vec![vec![0.0, 0.0]; 3];
        let mdp = TabularMdp::from_dense(&t, &r, vec![1.0, 0.0, 0.0]).unwrap();
        let pi = TabularPolicy::from_rows(&[vec![0.2, 0.8], vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let d = stationary_distribution(&mdp, &pi, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        for (a, b) in d.probs().iter().zip(q) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_reward_gives_constant_average() {
        let mdp = two_state(0.2, [3.5, 3.5]);
        assert!((average_reward(&mdp, &TabularPolicy::uniform(2, 1)).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let mdp = two_state(0.0, [0.0, 1.0]);
        let err = stationary_distribution(&mdp, &TabularPolicy::uniform(2, 1), DEFAULT_TOL, DEFAULT_MAX_ITERS);
        assert!(matches!(err, Err(OpeError::NonErgodicChain { .. })));
    }

    #[test]
    fn iteration_budget_exhaustion_is_reported() {
        let t = vec![vec![vec![0.999, 0.001]], vec![vec![0.5, 0.5]]];
        let mdp = TabularMdp::from_dense(&t, &[vec![0.0], vec![0.0]], vec![1.0, 0.0]).unwrap();
        let err = stationary_distribution(&mdp, &TabularPolicy::uniform(2, 1), 1e-14, 3);
        assert!(matches!(err, Err(OpeError::NonErgodicChain { iterations: 3, .. })));
    }

    #[test]
    fn singlepath_balance_residual_within_tol() {
        let mdp = build_singlepath();
        let pi = TabularPolicy::uniform(5, 2);
        let d = stationary_distribution(&mdp, &pi, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let chain = policy_chain(&mdp, &pi);
        let mut next = vec![0.0; 5];
        step(&chain, d.probs(), &mut next);
        let residual: f64 = d.probs().iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        assert!(residual <= DEFAULT_TOL);
        assert!(d.probs().iter().all(|&p| p > 0.0));
    }
}
