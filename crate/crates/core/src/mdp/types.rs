use crate::error::{OpeError, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

fn check_probability_row(row: &[f64], tol: f64, what: &str) -> Result<()> {
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(OpeError::InvalidInput(format!("{what}: entry {p} is not a nonnegative probability")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > tol {
        return Err(OpeError::InvalidInput(format!("{what}: sums to {sum}, expected 1")));
    }
    Ok(())
}

/// A finite MDP with a sparse transition tensor.
///
/// Transitions for the pair `(s, a)` are stored as `(next_state, probability)`
/// lists at index `s * num_actions + a`, with strictly positive probabilities
/// and unique next states.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    rewards: Vec<f64>,
    initial_dist: Vec<f64>,
}

impl TabularMdp {
    /// Builds an MDP from sparse transition rows, a flat `s * A + a` reward table
    /// and an initial distribution. Duplicate next states are merged and zero
    /// entries dropped.
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transitions: Vec<Vec<(usize, f64)>>,
        rewards: Vec<f64>,
        initial_dist: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(OpeError::InvalidInput("MDP needs at least one state and one action".into()));
        }
        let pairs = num_states * num_actions;
        if transitions.len() != pairs || rewards.len() != pairs {
            return Err(OpeError::InvalidInput(format!(
                "expected {pairs} transition rows and rewards, got {} and {}",
                transitions.len(),
                rewards.len()
            )));
        }
        if initial_dist.len() != num_states {
            return Err(OpeError::InvalidInput("initial distribution has wrong length".into()));
        }
        check_probability_row(&initial_dist, STOCHASTIC_TOL, "initial distribution")?;
        if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
            return Err(OpeError::InvalidInput(format!("non-finite reward {r}")));
        }

        let mut merged = Vec::with_capacity(pairs);
        for (idx, mut row) in transitions.into_iter().enumerate() {
            if let Some(&(s, _)) = row.iter().find(|(s, _)| *s >= num_states) {
                return Err(OpeError::InvalidInput(format!("transition row {idx} targets state {s}")));
            }
            row.sort_by_key(|&(s, _)| s);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (s, p) in row {
                match out.last_mut() {
                    Some(last) if last.0 == s => last.1 += p,
                    _ => out.push((s, p)),
                }
            }
            let probs: Vec<f64> = out.iter().map(|&(_, p)| p).collect();
            check_probability_row(&probs, STOCHASTIC_TOL, &format!("transition row {idx}"))?;
            out.retain(|&(_, p)| p > 0.0);
            merged.push(out);
        }

        Ok(Self { num_states, num_actions, transitions: merged, rewards, initial_dist })
    }

    /// Builds an MDP from a dense `T[s][a][s']` tensor and `r[s][a]` table.
    pub fn from_dense(transition: &[Vec<Vec<f64>>], reward: &[Vec<f64>], initial_dist: Vec<f64>) -> Result<Self> {
        let num_states = transition.len();
        let num_actions = transition.first().map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(num_states * num_actions);
        let mut rewards = Vec::with_capacity(num_states * num_actions);
        for s in 0..num_states {
            if transition[s].len() != num_actions || reward.get(s).is_none_or(|r| r.len() != num_actions) {
                return Err(OpeError::InvalidInput(format!("ragged tables at state {s}")));
            }
            for a in 0..num_actions {
                if transition[s][a].len() != num_states {
                    return Err(OpeError::InvalidInput(format!("transition row ({s},{a}) has wrong length")));
                }
                rows.push(transition[s][a].iter().copied().enumerate().collect());
                rewards.push(reward[s][a]);
            }
        }
        Self::new(num_states, num_actions, rows, rewards, initial_dist)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Sparse `(next_state, probability)` list for `(s, a)`.
    pub fn transitions(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.num_actions + a]
    }

    /// Dense probability `T(next | s, a)`.
    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transitions(s, a)
            .binary_search_by_key(&next, |&(n, _)| n)
            .map_or(0.0, |i| self.transitions(s, a)[i].1)
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Same dynamics with a different start distribution.
    pub fn with_initial_dist(&self, initial_dist: Vec<f64>) -> Result<Self> {
        if initial_dist.len() != self.num_states {
            return Err(OpeError::InvalidInput("initial distribution has wrong length".into()));
        }
        check_probability_row(&initial_dist, 1e-9, "initial distribution")?;
        Ok(Self { initial_dist, ..self.clone() })
    }

    /// Re-checks the stochasticity invariants; constructors already enforce them.
    pub fn validate(&self) -> Result<()> {
        check_probability_row(&self.initial_dist, STOCHASTIC_TOL, "initial distribution")?;
        for (idx, row) in self.transitions.iter().enumerate() {
            let probs: Vec<f64> = row.iter().map(|&(_, p)| p).collect();
            check_probability_row(&probs, STOCHASTIC_TOL, &format!("transition row {idx}"))?;
        }
        Ok(())
    }
}

/// Row-stochastic action probabilities `π(a|s)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 || probs.len() != num_states * num_actions {
            return Err(OpeError::InvalidInput(format!(
                "policy table of length {} does not match {num_states}x{num_actions}",
                probs.len()
            )));
        }
        for row in probs.chunks(num_actions) {
            check_probability_row(row, STOCHASTIC_TOL, "policy row")?;
        }
        Ok(Self { num_states, num_actions, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let num_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_actions) {
            return Err(OpeError::InvalidInput("ragged policy rows".into()));
        }
        Self::new(rows.len(), num_actions, rows.concat())
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        Self { num_states, num_actions, probs: vec![1.0 / num_actions as f64; num_states * num_actions] }
    }

    /// Puts all mass on `actions[s]` in each state.
    pub fn deterministic(num_actions: usize, actions: &[usize]) -> Result<Self> {
        let mut probs = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            if a >= num_actions {
                return Err(OpeError::InvalidInput(format!("action {a} out of range")));
            }
            probs[s * num_actions + a] = 1.0;
        }
        Self::new(actions.len(), num_actions, probs)
    }

    pub(crate) fn from_raw(num_states: usize, num_actions: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), num_states * num_actions);
        Self { num_states, num_actions, probs }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.num_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.num_actions..(s + 1) * self.num_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn matches(&self, mdp: &TabularMdp) -> bool {
        self.num_states == mdp.num_states() && self.num_actions == mdp.num_actions()
    }
}

/// A probability vector over states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl StateDistribution {
    /// Validates nonnegativity and unit mass (within 1e-9).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probability_row(&probs, 1e-9, "state distribution")?;
        Ok(Self { probs })
    }

    /// Scales a nonnegative vector to unit mass.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(OpeError::InvalidInput("distribution weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(OpeError::InvalidInput("distribution weights have zero mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { probs: weights })
    }

    pub fn indicator(num_states: usize, s: usize) -> Self {
        let mut probs = vec![0.0; num_states];
        probs[s] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
}

/// One rollout of a behavior policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub policy_label: usize,
}

impl Trajectory {
    /// True when every step's `next_state` is the following step's `state`.
    pub fn is_chained(&self) -> bool {
        self.steps.windows(2).all(|w| w[0].next_state == w[1].state)
    }
}

/// A logged `(s, a, s', r)` tuple with optional behavior label and sample weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
    pub reward: f64,
    pub label: Option<usize>,
    pub weight: f64,
}

impl Transition {
    pub fn new(state: usize, action: usize, next_state: usize, reward: f64) -> Self {
        Self { state, action, next_state, reward, label: None, weight: 1.0 }
    }

    pub fn labeled(mut self, label: usize) -> Self {
        self.label = Some(label);
        self
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

/// A flat bag of transitions, possibly pooled from several behavior policies.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionDataset {
    records: Vec<Transition>,
    counts_per_label: Vec<usize>,
}

impl TransitionDataset {
    pub fn new(records: Vec<Transition>) -> Result<Self> {
        let mut counts_per_label = Vec::new();
        for (i, r) in records.iter().enumerate() {
            if !r.weight.is_finite() || r.weight < 0.0 {
                return Err(OpeError::InvalidInput(format!("record {i} has invalid weight {}", r.weight)));
            }
            if !r.reward.is_finite() {
                return Err(OpeError::InvalidInput(format!("record {i} has non-finite reward")));
            }
            if let Some(j) = r.label {
                if counts_per_label.len() <= j {
                    counts_per_label.resize(j + 1, 0);
                }
                counts_per_label[j] += 1;
            }
        }
        Ok(Self { records, counts_per_label })
    }

    /// Flattens trajectories into labeled, unit-weight transitions.
    pub fn from_trajectories(trajectories: &[Trajectory]) -> Self {
        let records = trajectories
            .iter()
            .flat_map(|t| {
                t.steps
                    .iter()
                    .map(move |st| Transition::new(st.state, st.action, st.next_state, st.reward).labeled(t.policy_label))
            })
            .collect();
        Self::new(records).expect("trajectory records are valid")
    }

    pub fn records(&self) -> &[Transition] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `N_j` for every label seen (indexed by label).
    pub fn counts_per_label(&self) -> &[usize] {
        &self.counts_per_label
    }

    pub fn total_weight(&self) -> f64 {
        self.records.iter().map(|r| r.weight).sum()
    }

    /// Fails with `MissingLabel` at the first unlabeled record.
    pub fn require_labels(&self) -> Result<()> {
        match self.records.iter().position(|r| r.label.is_none()) {
            Some(index) => Err(OpeError::MissingLabel { index }),
            None => Ok(()),
        }
    }

    /// Records carrying `label`, in original order.
    pub fn subset_with_label(&self, label: usize) -> Self {
        let records: Vec<Transition> = self.records.iter().copied().filter(|r| r.label == Some(label)).collect();
        Self::new(records).expect("subset of a valid dataset is valid")
    }

    /// Multiplies each record's weight by `factor(record)`.
    pub fn reweighted(&self, factor: impl Fn(&Transition) -> f64) -> Result<Self> {
        Self::new(self.records.iter().map(|r| r.weighted(r.weight * factor(r))).collect())
    }

    pub fn max_state(&self) -> Option<usize> {
        self.records.iter().map(|r| r.state.max(r.next_state)).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mdp_rejects_non_stochastic_rows() {
        let err = TabularMdp::new(1, 1, vec![vec![(0, 0.5)]], vec![0.0], vec![1.0]);
        assert!(err.is_err());
    }

    #[test]
    fn mdp_merges_duplicate_next_states() {
        let mdp = TabularMdp::new(2, 1, vec![vec![(1, 0.25), (1, 0.25), (0, 0.5)], vec![(0, 1.0)]], vec![0.0, 0.0], vec![1.0, 0.0])
            .unwrap();
        assert_eq!(mdp.transitions(0, 0), &[(0, 0.5), (1, 0.5)]);
        assert_eq!(mdp.transition_prob(0, 0, 1), 0.5);
        assert_eq!(mdp.transition_prob(1, 0, 1), 0.0);
    }

    #[test]
    fn policy_rejects_bad_rows() {
        assert!(TabularPolicy::new(1, 2, vec![0.6, 0.6]).is_err());
        assert!(TabularPolicy::new(1, 2, vec![1.5, -0.5]).is_err());
        assert!(TabularPolicy::new(1, 2, vec![0.4, 0.6]).is_ok());
    }

    #[test]
    fn dataset_counts_labels_and_rejects_negative_weight() {
        let d = TransitionDataset::new(vec![
            Transition::new(0, 0, 1, 0.0).labeled(1),
            Transition::new(1, 0, 0, 0.0).labeled(1),
            Transition::new(1, 0, 0, 0.0).labeled(0),
        ])
        .unwrap();
        assert_eq!(d.counts_per_label(), &[1, 2]);
        assert_eq!(d.counts_per_label().iter().sum::<usize>(), d.len());
        assert!(TransitionDataset::new(vec![Transition::new(0, 0, 0, 0.0).weighted(-1.0)]).is_err());
    }

    #[test]
    fn require_labels_reports_first_missing() {
        let d = TransitionDataset::new(vec![Transition::new(0, 0, 0, 0.0).labeled(0), Transition::new(0, 0, 0, 0.0)]).unwrap();
        assert!(matches!(d.require_labels(), Err(OpeError::MissingLabel { index: 1 })));
    }
}
