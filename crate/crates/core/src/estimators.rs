//! Average-reward estimators built on learned corrections, plus the
//! step-wise weighted importance sampling baseline.

use crate::correction::{
    fit_emp, importance_ratio, learn_bch, learn_bch_pooled, CorrectionVector, KernelSpec, SolverParams,
    StateActionCorrection,
};
use crate::error::{OpeError, Result};
use crate::mdp::{StateDistribution, TabularPolicy, Trajectory, TransitionDataset};
use crate::policy_estimation::{compute_kl_weights, estimate_policy_mle, visited_states, WeightVector};

/// Per-policy state weights `h_j(s)` forming a partition of unity.
#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicTable {
    h: Vec<Vec<f64>>,
}

impl HeuristicTable {
    /// `h[j][s]`; every state's column must be nonnegative and sum to 1.
    pub fn new(h: Vec<Vec<f64>>) -> Result<Self> {
        let Some(n) = h.first().map(Vec::len) else {
            return Err(OpeError::InvalidInput("heuristic table needs at least one policy".into()));
        };
        if h.iter().any(|row| row.len() != n || row.iter().any(|x| !(*x >= 0.0))) {
            return Err(OpeError::InvalidInput("heuristic rows must be nonnegative with equal length".into()));
        }
        for s in 0..n {
            let total: f64 = h.iter().map(|row| row[s]).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(OpeError::InvalidInput(format!("heuristics at state {s} sum to {total}")));
            }
        }
        Ok(Self { h })
    }

    /// All weight on policy `j`.
    pub fn concentrated(num_policies: usize, j: usize, num_states: usize) -> Self {
        let h = (0..num_policies).map(|k| vec![f64::from(u8::from(k == j)); num_states]).collect();
        Self { h }
    }

    pub fn num_policies(&self) -> usize {
        self.h.len()
    }

    pub fn num_states(&self) -> usize {
        self.h[0].len()
    }

    pub fn get(&self, j: usize, s: usize) -> f64 {
        self.h[j][s]
    }
}

/// `h_j(s) = w_j d_j(s) / Σ_k w_k d_k(s)`, uniform where every term vanishes.
pub fn balanced_heuristic(weights: &WeightVector, stationary_dists: &[StateDistribution]) -> Result<HeuristicTable> {
    let m = weights.len();
    if m == 0 || stationary_dists.len() != m {
        return Err(OpeError::InvalidInput("one distribution per weight is required".into()));
    }
    let n = stationary_dists[0].len();
    if stationary_dists.iter().any(|d| d.len() != n) {
        return Err(OpeError::InvalidInput("distributions cover different state sets".into()));
    }
    let w = weights.as_slice();
    let mut h = vec![vec![0.0; n]; m];
    for s in 0..n {
        let total: f64 = (0..m).map(|j| w[j] * stationary_dists[j].probs()[s]).sum();
        for j in 0..m {
            h[j][s] = if total > 0.0 { w[j] * stationary_dists[j].probs()[s] / total } else { 1.0 / m as f64 };
        }
    }
    Ok(HeuristicTable { h })
}

fn nonempty_weight(data: &TransitionDataset) -> Result<f64> {
    let total = data.total_weight();
    if data.is_empty() || total <= 0.0 {
        return Err(OpeError::InvalidInput("estimate needs records with positive weight".into()));
    }
    Ok(total)
}

/// `Σ w_i ω(s_i) [π(a_i|s_i)/denom(a_i|s_i)] r_i / Σ w_i`.
pub fn ratio_reward_estimate(
    data: &TransitionDataset,
    omega: &CorrectionVector,
    target: &TabularPolicy,
    denom_policy: &TabularPolicy,
) -> Result<f64> {
    let total = nonempty_weight(data)?;
    let sum: f64 = data
        .records()
        .iter()
        .map(|r| r.weight * omega.value(r.state) * importance_ratio(target, denom_policy, r.state, r.action) * r.reward)
        .sum();
    Ok(sum / total)
}

/// Ratio estimate where each record is divided by its own labeled behavior.
pub fn ratio_reward_estimate_per_label(
    data: &TransitionDataset,
    omega: &CorrectionVector,
    target: &TabularPolicy,
    behaviors: &[TabularPolicy],
) -> Result<f64> {
    let total = nonempty_weight(data)?;
    let mut sum = 0.0;
    for (index, r) in data.records().iter().enumerate() {
        let j = r.label.ok_or(OpeError::MissingLabel { index })?;
        let pi_j = behaviors
            .get(j)
            .ok_or_else(|| OpeError::InvalidInput(format!("label {j} has no behavior policy")))?;
        sum += r.weight * omega.value(r.state) * importance_ratio(target, pi_j, r.state, r.action) * r.reward;
    }
    Ok(sum / total)
}

/// `Σ w_i u(s_i,a_i) π(a_i|s_i) r_i / Σ w_i`.
pub fn sadl_reward_estimate(data: &TransitionDataset, u: &StateActionCorrection, target: &TabularPolicy) -> Result<f64> {
    let total = nonempty_weight(data)?;
    let sum: f64 = data
        .records()
        .iter()
        .map(|r| r.weight * u.value(r.state, r.action) * target.prob(r.state, r.action) * r.reward)
        .sum();
    Ok(sum / total)
}

/// Multiple importance sampling:
/// `Σ_j (1/N_j) Σ_{label j} h_j(s) ω_j(s) [π(a|s)/π_j(a|s)] r`.
///
/// `N_j` is the total record weight carrying label `j`, so unit weights give
/// plain counts.
pub fn mis_reward_estimate(
    data: &TransitionDataset,
    omegas: &[CorrectionVector],
    behaviors: &[TabularPolicy],
    target: &TabularPolicy,
    heuristics: &HeuristicTable,
) -> Result<f64> {
    data.require_labels()?;
    let m = omegas.len();
    if behaviors.len() != m || heuristics.num_policies() != m {
        return Err(OpeError::InvalidInput("one correction, behavior and heuristic row per label".into()));
    }
    let mut mass = vec![0.0; m];
    let mut sums = vec![0.0; m];
    for r in data.records() {
        let j = r.label.expect("labels checked");
        if j >= m {
            return Err(OpeError::InvalidInput(format!("label {j} exceeds the {m} behaviors")));
        }
        mass[j] += r.weight;
        sums[j] += r.weight
            * heuristics.get(j, r.state)
            * omegas[j].value(r.state)
            * importance_ratio(target, &behaviors[j], r.state, r.action)
            * r.reward;
    }
    Ok((0..m).filter(|&j| mass[j] > 0.0).map(|j| sums[j] / mass[j]).sum())
}

/// Step-wise weighted importance sampling for the average reward.
///
/// Step `t` of a trajectory is weighted by the running product of
/// `π/π_j` up to and including `t`; the estimate is the weighted mean reward.
pub fn stepwise_wis_estimate(
    trajectories: &[Trajectory],
    target: &TabularPolicy,
    behaviors: &[TabularPolicy],
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for traj in trajectories {
        let pi_j = behaviors.get(traj.policy_label).ok_or_else(|| {
            OpeError::InvalidInput(format!("trajectory label {} has no behavior policy", traj.policy_label))
        })?;
        let mut rho = 1.0;
        for step in &traj.steps {
            rho *= importance_ratio(target, pi_j, step.state, step.action);
            num += rho * step.reward;
            den += rho;
        }
    }
    if den > 0.0 {
        Ok(num / den)
    } else if trajectories.iter().all(|t| t.steps.is_empty()) {
        Err(OpeError::InvalidInput("no steps to weight".into()))
    } else {
        // every path has zero target probability
        Ok(0.0)
    }
}

/// BCH correction followed by the ratio estimate with the same behavior.
pub fn bch_estimate(
    data: &TransitionDataset,
    target: &TabularPolicy,
    exact_behavior: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<(f64, CorrectionVector)> {
    let omega = learn_bch(data, target, exact_behavior, kernel, params)?;
    Ok((ratio_reward_estimate(data, &omega, target, exact_behavior)?, omega))
}

/// EMP correction followed by the ratio estimate against the same estimated policy.
pub fn emp_estimate(
    data: &TransitionDataset,
    target: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<(f64, CorrectionVector)> {
    let fit = fit_emp(data, target, kernel, params)?;
    let estimate = ratio_reward_estimate(data, &fit.correction, target, &fit.estimated_behavior)?;
    Ok((estimate, fit.correction))
}

/// Pooled correction with per-label exact ratios and the matching estimate.
pub fn bch_pooled_estimate(
    data: &TransitionDataset,
    target: &TabularPolicy,
    exact_behaviors: &[TabularPolicy],
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<(f64, CorrectionVector)> {
    let omega = learn_bch_pooled(data, target, exact_behaviors, kernel, params)?;
    Ok((ratio_reward_estimate_per_label(data, &omega, target, exact_behaviors)?, omega))
}

/// Mean of the EMP estimates run separately on each label's records.
pub fn emp_single_estimate(
    data: &TransitionDataset,
    target: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<f64> {
    data.require_labels()?;
    let labels: Vec<usize> = (0..data.counts_per_label().len()).filter(|&j| data.counts_per_label()[j] > 0).collect();
    let mut total = 0.0;
    for &j in &labels {
        total += emp_estimate(&data.subset_with_label(j), target, kernel, params)?.0;
    }
    Ok(total / labels.len() as f64)
}

/// Multiplies each label-`j` record's weight by `w_j / (N_j / N)`, where `w`
/// are the KL-closeness weights of `behaviors` over the visited states.
pub fn kl_reweight(
    data: &TransitionDataset,
    target: &TabularPolicy,
    behaviors: &[TabularPolicy],
) -> Result<(TransitionDataset, WeightVector)> {
    data.require_labels()?;
    let counts = data.counts_per_label();
    if behaviors.len() < counts.len() {
        return Err(OpeError::InvalidInput(format!("{} labels but {} behaviors", counts.len(), behaviors.len())));
    }
    let kl = compute_kl_weights(target, behaviors, &visited_states(data))?;
    let n = data.len() as f64;
    let factors: Vec<f64> = (0..behaviors.len())
        .map(|j| match counts.get(j) {
            Some(&c) if c > 0 => kl.as_slice()[j] * n / c as f64,
            _ => 0.0,
        })
        .collect();
    let reweighted = data.reweighted(|r| factors[r.label.expect("labels checked")])?;
    Ok((reweighted, kl))
}

/// Per-label MLE policies for labels `0..m`.
pub fn estimate_label_policies(data: &TransitionDataset, num_states: usize, num_actions: usize) -> Result<Vec<TabularPolicy>> {
    data.require_labels()?;
    (0..data.counts_per_label().len())
        .map(|j| estimate_policy_mle(&data.subset_with_label(j), num_states, num_actions))
        .collect()
}

/// KL-EMP: estimate each label's policy, reweight labels by KL closeness to
/// the target, then run pooled EMP on the reweighted records.
pub fn kl_emp_estimate(
    data: &TransitionDataset,
    target: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<(f64, CorrectionVector)> {
    let estimated = estimate_label_policies(data, target.num_states(), target.num_actions())?;
    let (reweighted, _) = kl_reweight(data, target, &estimated)?;
    emp_estimate(&reweighted, target, kernel, params)
}

/// KL reweighting with the exact behaviors, then the per-label pooled learner.
pub fn bch_kl_pooled_estimate(
    data: &TransitionDataset,
    target: &TabularPolicy,
    exact_behaviors: &[TabularPolicy],
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<(f64, CorrectionVector)> {
    let (reweighted, _) = kl_reweight(data, target, exact_behaviors)?;
    bch_pooled_estimate(&reweighted, target, exact_behaviors, kernel, params)
}
