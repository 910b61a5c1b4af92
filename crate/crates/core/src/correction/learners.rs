use super::kernel::KernelSpec;
use super::quadratic::QuadraticForm;
use super::solver::{solve_normalized_quadratic, SolverParams};
use crate::error::{OpeError, Result};
use crate::mdp::{StateDistribution, TabularMdp, TabularPolicy, Transition, TransitionDataset};
use crate::policy_estimation::{empirical_state_distribution, estimate_policy_mle, WeightVector, PROB_FLOOR};

/// `π(a|s) / denom(a|s)` with the denominator floored at [`PROB_FLOOR`].
pub fn importance_ratio(target: &TabularPolicy, denom: &TabularPolicy, s: usize, a: usize) -> f64 {
    target.prob(s, a) / denom.prob(s, a).max(PROB_FLOOR)
}

/// Which policy divides the target in a record's importance ratio.
#[derive(Debug, Clone, Copy)]
enum Denominator<'a> {
    Single(&'a TabularPolicy),
    PerLabel(&'a [TabularPolicy]),
}

impl Denominator<'_> {
    fn ratio(&self, target: &TabularPolicy, index: usize, r: &Transition) -> Result<f64> {
        match *self {
            Denominator::Single(p) => Ok(importance_ratio(target, p, r.state, r.action)),
            Denominator::PerLabel(ps) => {
                let j = r.label.ok_or(OpeError::MissingLabel { index })?;
                let p = ps.get(j).ok_or_else(|| {
                    OpeError::InvalidInput(format!("record {index} has label {j} but only {} behaviors", ps.len()))
                })?;
                Ok(importance_ratio(target, p, r.state, r.action))
            }
        }
    }
}

/// Learned state correction `ω ≈ d_π / d_0`, normalized so `Σ d̂_0·ω = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionVector {
    values: Vec<f64>,
    reference_dist: StateDistribution,
}

impl CorrectionVector {
    pub fn new(values: Vec<f64>, reference_dist: StateDistribution) -> Result<Self> {
        if values.len() != reference_dist.len() {
            return Err(OpeError::InvalidInput("correction and reference lengths differ".into()));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(OpeError::InvalidInput("correction values must be finite and nonnegative".into()));
        }
        let mass: f64 = values.iter().zip(reference_dist.probs()).map(|(v, d)| v * d).sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(OpeError::InvalidInput(format!("correction normalizes to {mass}, expected 1")));
        }
        Ok(Self { values, reference_dist })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, s: usize) -> f64 {
        self.values[s]
    }

    pub fn reference_dist(&self) -> &StateDistribution {
        &self.reference_dist
    }

    /// `ω(s)·d̂_0(s)` renormalized: the implied estimate of `d_π`.
    pub fn implied_distribution(&self) -> StateDistribution {
        let w = self.values.iter().zip(self.reference_dist.probs()).map(|(v, d)| v * d).collect();
        StateDistribution::normalized(w).expect("normalized correction has positive mass")
    }
}

/// Learned occupation correction `u(s,a) ≈ d_π(s) / (d_0(s)·π_0(a|s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateActionCorrection {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
    reference: Vec<f64>,
}

impl StateActionCorrection {
    /// Wraps explicit values, e.g. an oracle `u`. Both vectors are indexed `s * A + a`.
    pub fn from_parts(num_states: usize, num_actions: usize, values: Vec<f64>, reference: Vec<f64>) -> Self {
        assert_eq!(values.len(), num_states * num_actions, "values must cover every pair");
        assert_eq!(reference.len(), values.len(), "reference must cover every pair");
        Self { num_states, num_actions, values, reference }
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.num_actions + a]
    }

    /// Values indexed `s * A + a`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weighted empirical `(s,a)` frequency times `π(a|s)`, indexed `s * A + a`.
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

fn check_records(data: &TransitionDataset, num_states: usize, num_actions: usize) -> Result<f64> {
    if data.is_empty() {
        return Err(OpeError::InvalidInput("empty dataset".into()));
    }
    for r in data.records() {
        if r.state >= num_states || r.next_state >= num_states || r.action >= num_actions {
            return Err(OpeError::InvalidInput(format!(
                "record ({}, {}, {}) out of range",
                r.state, r.action, r.next_state
            )));
        }
    }
    let total = data.total_weight();
    if total <= 0.0 {
        return Err(OpeError::DegenerateReference);
    }
    Ok(total)
}

/// Quadratic `D(ω) = ωᵀAω` of the kernel min-max objective over states.
///
/// Each record contributes `Δ_i(ω) = ρ_i·ω(s_i) − ω(s'_i)` and
/// `D(ω) = W⁻² Σ_ij w_i w_j k(s'_i, s'_j) Δ_i Δ_j`.
pub fn assemble_state_quadratic(
    data: &TransitionDataset,
    target: &TabularPolicy,
    denom_policy: &TabularPolicy,
    kernel: &KernelSpec,
    num_states: usize,
) -> Result<QuadraticForm> {
    assemble_state_quadratic_with(data, target, Denominator::Single(denom_policy), kernel, num_states)
}

fn assemble_state_quadratic_with(
    data: &TransitionDataset,
    target: &TabularPolicy,
    denom: Denominator<'_>,
    kernel: &KernelSpec,
    num_states: usize,
) -> Result<QuadraticForm> {
    let total = check_records(data, num_states, target.num_actions())?;
    let gram = kernel.state_gram(num_states)?;
    let mut triplets = Vec::with_capacity(2 * data.len());
    for (i, r) in data.records().iter().enumerate() {
        let rho = denom.ratio(target, i, r)?;
        triplets.push((r.next_state, r.state, r.weight * rho));
        triplets.push((r.next_state, r.next_state, -r.weight));
    }
    Ok(QuadraticForm::from_triplets(num_states, num_states, triplets, gram, 1.0 / (total * total)))
}

/// Quadratic `D(u) = uᵀAu` over `(s,a)` pairs indexed `s * A + a`.
///
/// Record `i` acts on a test function `f` through
/// `u(s_i,a_i)·[ν(a_i) f(s_i,a_i) − π(a_i|s_i) Σ_a' ν(a') f(s'_i,a')]`.
pub fn assemble_state_action_quadratic(
    data: &TransitionDataset,
    target: &TabularPolicy,
    action_weighting: &[f64],
    kernel: &KernelSpec,
    num_states: usize,
    num_actions: usize,
) -> Result<QuadraticForm> {
    if action_weighting.len() != num_actions {
        return Err(OpeError::InvalidInput("action weighting length differs from the action count".into()));
    }
    if action_weighting.iter().any(|p| !(*p >= 0.0)) || (action_weighting.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(OpeError::InvalidInput("action weighting must be a probability vector".into()));
    }
    let total = check_records(data, num_states, num_actions)?;
    let gram = kernel.state_action_gram(num_states, num_actions)?;
    let dim = num_states * num_actions;
    let mut triplets = Vec::with_capacity(data.len() * (num_actions + 1));
    for r in data.records() {
        let k = r.state * num_actions + r.action;
        triplets.push((k, k, r.weight * action_weighting[r.action]));
        let push = r.weight * target.prob(r.state, r.action);
        for (b, &nu) in action_weighting.iter().enumerate() {
            if nu > 0.0 {
                triplets.push((r.next_state * num_actions + b, k, -push * nu));
            }
        }
    }
    Ok(QuadraticForm::from_triplets(dim, dim, triplets, gram, 1.0 / (total * total)))
}

fn learn_state_correction(
    data: &TransitionDataset,
    target: &TabularPolicy,
    denom: Denominator<'_>,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<CorrectionVector> {
    let n = target.num_states();
    let a = assemble_state_quadratic_with(data, target, denom, kernel, n)?;
    let reference = empirical_state_distribution(data, n)?;
    let omega = solve_normalized_quadratic(&a, reference.probs(), params)?;
    CorrectionVector::new(omega, reference)
}

/// Correction learned against the known behavior policy.
pub fn learn_bch(
    data: &TransitionDataset,
    target: &TabularPolicy,
    exact_behavior: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<CorrectionVector> {
    learn_state_correction(data, target, Denominator::Single(exact_behavior), kernel, params)
}

/// An EMP correction together with the estimated policy it was learned against.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpFit {
    pub correction: CorrectionVector,
    pub estimated_behavior: TabularPolicy,
}

/// EMP with the estimated policy returned for reuse in the reward estimate.
pub fn fit_emp(
    data: &TransitionDataset,
    target: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<EmpFit> {
    let estimated = estimate_policy_mle(data, target.num_states(), target.num_actions())?;
    let correction = learn_state_correction(data, target, Denominator::Single(&estimated), kernel, params)?;
    Ok(EmpFit { correction, estimated_behavior: estimated })
}

/// Correction learned against the maximum-likelihood estimate of the
/// (possibly mixed) behavior policy. Labels are never consulted.
pub fn learn_emp(
    data: &TransitionDataset,
    target: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<CorrectionVector> {
    fit_emp(data, target, kernel, params).map(|fit| fit.correction)
}

/// Pooled correction where each record is reweighted by its own behavior.
pub fn learn_bch_pooled(
    data: &TransitionDataset,
    target: &TabularPolicy,
    exact_behaviors: &[TabularPolicy],
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<CorrectionVector> {
    data.require_labels()?;
    learn_state_correction(data, target, Denominator::PerLabel(exact_behaviors), kernel, params)
}

/// Behavior-agnostic state-action correction.
pub fn learn_sadl(
    data: &TransitionDataset,
    target: &TabularPolicy,
    action_weighting: &[f64],
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<StateActionCorrection> {
    let (n, k) = (target.num_states(), target.num_actions());
    let a = assemble_state_action_quadratic(data, target, action_weighting, kernel, n, k)?;
    let total = data.total_weight();
    let mut reference = vec![0.0; n * k];
    for r in data.records() {
        reference[r.state * k + r.action] += r.weight * target.prob(r.state, r.action) / total;
    }
    let values = solve_normalized_quadratic(&a, &reference, params)?;
    Ok(StateActionCorrection { num_states: n, num_actions: k, values, reference })
}

/// One record per `(s, a, s')` with weight `d_0(s)·π_0(a|s)·T(s'|s,a)`:
/// fed to the sample-based assembly it yields the population objective.
pub fn population_dataset(
    mdp: &TabularMdp,
    behavior: &TabularPolicy,
    state_dist: &StateDistribution,
) -> Result<TransitionDataset> {
    let mut records = Vec::new();
    push_population(mdp, behavior, state_dist, 1.0, None, &mut records)?;
    TransitionDataset::new(records)
}

/// Labeled population records for several behaviors, label `j` weighted by
/// `w_j·d_j(s)·π_j(a|s)·T(s'|s,a)`.
pub fn population_dataset_labeled(
    mdp: &TabularMdp,
    behaviors: &[TabularPolicy],
    weights: &WeightVector,
    state_dists: &[StateDistribution],
) -> Result<TransitionDataset> {
    if behaviors.len() != weights.len() || behaviors.len() != state_dists.len() {
        return Err(OpeError::InvalidInput("behaviors, weights and distributions must have equal length".into()));
    }
    let mut records = Vec::new();
    for (j, (pi, d)) in behaviors.iter().zip(state_dists).enumerate() {
        push_population(mdp, pi, d, weights.as_slice()[j], Some(j), &mut records)?;
    }
    TransitionDataset::new(records)
}

fn push_population(
    mdp: &TabularMdp,
    behavior: &TabularPolicy,
    state_dist: &StateDistribution,
    scale: f64,
    label: Option<usize>,
    out: &mut Vec<Transition>,
) -> Result<()> {
    if !behavior.matches(mdp) || state_dist.len() != mdp.num_states() {
        return Err(OpeError::InvalidInput("policy or distribution does not match the MDP".into()));
    }
    for s in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            let mass = scale * state_dist.probs()[s] * behavior.prob(s, a);
            if mass <= 0.0 {
                continue;
            }
            for &(next, p) in mdp.transitions(s, a) {
                let mut t = Transition::new(s, a, next, mdp.reward(s, a)).weighted(mass * p);
                t.label = label;
                out.push(t);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{random_mdp, random_policy, stationary_distribution};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_dataset(n: usize, k: usize, len: usize, seed: u64) -> TransitionDataset {
        let mut rng = crate::rng::rng_from_seed(seed);
        let records = (0..len)
            .map(|_| {
                Transition::new(rng.gen_range(0..n), rng.gen_range(0..k), rng.gen_range(0..n), rng.gen_range(-1.0..1.0))
                    .weighted(rng.gen_range(0.1..2.0))
            })
            .collect();
        TransitionDataset::new(records).unwrap()
    }

    fn naive_state_quadratic(
        data: &TransitionDataset,
        target: &TabularPolicy,
        denom: &TabularPolicy,
        k: impl Fn(usize, usize) -> f64,
        n: usize,
    ) -> nalgebra::DMatrix<f64> {
        let recs = data.records();
        let w = data.total_weight();
        let b = |r: &Transition| {
            let mut v = DVector::<f64>::zeros(n);
            v[r.state] += target.prob(r.state, r.action) / denom.prob(r.state, r.action);
            v[r.next_state] -= 1.0;
            v
        };
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        for ri in recs {
            for rj in recs {
                a += b(ri) * b(rj).transpose() * (ri.weight * rj.weight * k(ri.next_state, rj.next_state));
            }
        }
        a / (w * w)
    }

    #[test]
    fn state_assembly_matches_double_sum() {
        let data = random_dataset(3, 2, 20, 1);
        let (pi, mu) = (random_policy(3, 2, 2), random_policy(3, 2, 3));
        let a = assemble_state_quadratic(&data, &pi, &mu, &KernelSpec::state_delta(), 3).unwrap().to_dense();
        let naive = naive_state_quadratic(&data, &pi, &mu, |x, y| f64::from(u8::from(x == y)), 3);
        assert!((a - naive).amax() < 1e-12);

        let emb = vec![vec![0.0, 1.0], vec![0.5, 0.0], vec![2.0, 2.0]];
        let kernel = KernelSpec::gaussian(0.8, emb.clone());
        let a = assemble_state_quadratic(&data, &pi, &mu, &kernel, 3).unwrap().to_dense();
        let naive = naive_state_quadratic(
            &data,
            &pi,
            &mu,
            |x, y| {
                let d2: f64 = emb[x].iter().zip(&emb[y]).map(|(p, q)| (p - q) * (p - q)).sum();
                (-d2 / (2.0 * 0.64)).exp()
            },
            3,
        );
        assert!((a - naive).amax() < 1e-12);
    }

    #[test]
    fn on_policy_constant_has_zero_objective() {
        let data = random_dataset(4, 2, 30, 5);
        let pi = random_policy(4, 2, 6);
        let a = assemble_state_quadratic(&data, &pi, &pi, &KernelSpec::state_delta(), 4).unwrap();
        assert!(a.value(&[1.0; 4]).abs() < 1e-15);
    }

    #[test]
    fn missing_label_is_reported() {
        let mut records: Vec<Transition> = (0..3).map(|s| Transition::new(s, 0, 0, 0.0).labeled(0)).collect();
        records[1].label = None;
        let data = TransitionDataset::new(records).unwrap();
        let pi = TabularPolicy::uniform(3, 2);
        let err = learn_bch_pooled(&data, &pi, std::slice::from_ref(&pi), &KernelSpec::state_delta(), &SolverParams::default());
        assert!(matches!(err, Err(OpeError::MissingLabel { index: 1 })));
    }

    #[test]
    fn population_bch_recovers_true_ratio() {
        let mdp = random_mdp(4, 3, 11);
        let (pi, mu) = (random_policy(4, 3, 12), random_policy(4, 3, 13));
        let d_pi = stationary_distribution(&mdp, &pi, 1e-13, 1_000_000).unwrap();
        let d_mu = stationary_distribution(&mdp, &mu, 1e-13, 1_000_000).unwrap();
        let data = population_dataset(&mdp, &mu, &d_mu).unwrap();
        let omega = learn_bch(&data, &pi, &mu, &KernelSpec::state_delta(), &SolverParams::default()).unwrap();
        for s in 0..4 {
            let truth = d_pi.probs()[s] / d_mu.probs()[s];
            assert!((omega.value(s) - truth).abs() < 1e-3, "state {s}: {} vs {truth}", omega.value(s));
        }
        let a = assemble_state_quadratic(&data, &pi, &mu, &KernelSpec::state_delta(), 4).unwrap();
        let truth: Vec<f64> = (0..4).map(|s| d_pi.probs()[s] / d_mu.probs()[s]).collect();
        assert!(a.value(&truth) <= 1e-8);
    }

    #[test]
    fn pooled_with_one_behavior_is_bch() {
        let data = TransitionDataset::new(
            random_dataset(4, 2, 40, 21).records().iter().map(|r| r.labeled(0)).collect(),
        )
        .unwrap();
        let (pi, mu) = (random_policy(4, 2, 22), random_policy(4, 2, 23));
        let kernel = KernelSpec::state_delta();
        let params = SolverParams::default();
        let bch = learn_bch(&data, &pi, &mu, &kernel, &params).unwrap();
        let pooled = learn_bch_pooled(&data, &pi, std::slice::from_ref(&mu), &kernel, &params).unwrap();
        assert_eq!(bch, pooled);
    }

    fn naive_state_action_objective(
        data: &TransitionDataset,
        target: &TabularPolicy,
        nu: &[f64],
        k: impl Fn((usize, usize), (usize, usize)) -> f64,
        u: &[f64],
    ) -> f64 {
        let m = nu.len();
        let recs = data.records();
        let w = data.total_weight();
        let mut total = 0.0;
        for ri in recs {
            for rj in recs {
                let (ui, uj) = (u[ri.state * m + ri.action], u[rj.state * m + rj.action]);
                let (pi_i, pi_j) = (target.prob(ri.state, ri.action), target.prob(rj.state, rj.action));
                let xi = (ri.state, ri.action);
                let xj = (rj.state, rj.action);
                let mut term = nu[ri.action] * nu[rj.action] * k(xi, xj);
                for b in 0..m {
                    term -= nu[ri.action] * pi_j * nu[b] * k(xi, (rj.next_state, b));
                    term -= pi_i * nu[rj.action] * nu[b] * k((ri.next_state, b), xj);
                    for c in 0..m {
                        term += pi_i * pi_j * nu[b] * nu[c] * k((ri.next_state, b), (rj.next_state, c));
                    }
                }
                total += ri.weight * rj.weight * ui * uj * term;
            }
        }
        total / (w * w)
    }

    #[test]
    fn state_action_assembly_matches_four_term_sum() {
        let data = random_dataset(2, 2, 10, 31);
        let pi = random_policy(2, 2, 32);
        let nu = [0.3, 0.7];
        let mut rng = crate::rng::rng_from_seed(33);
        let u: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..3.0)).collect();

        let a = assemble_state_action_quadratic(&data, &pi, &nu, &KernelSpec::state_action_delta(), 2, 2).unwrap();
        let naive = naive_state_action_objective(&data, &pi, &nu, |x, y| f64::from(u8::from(x == y)), &u);
        assert!((a.value(&u) - naive).abs() < 1e-12);

        let emb = vec![vec![0.0], vec![1.5]];
        let kernel = KernelSpec::gaussian(1.1, emb.clone());
        let a = assemble_state_action_quadratic(&data, &pi, &nu, &kernel, 2, 2).unwrap();
        let naive = naive_state_action_objective(
            &data,
            &pi,
            &nu,
            |x, y| {
                let ds = emb[x.0][0] - emb[y.0][0];
                let da = if x.1 == y.1 { 0.0 } else { 2.0 };
                (-(ds * ds + da) / (2.0 * 1.21)).exp()
            },
            &u,
        );
        assert!((a.value(&u) - naive).abs() < 1e-12);
        assert_eq!(a.value(&[0.0; 4]), 0.0);
    }

    #[test]
    fn population_sadl_recovers_occupation_ratio() {
        let mdp = random_mdp(3, 2, 41);
        let (pi, mu) = (random_policy(3, 2, 42), random_policy(3, 2, 43));
        let d_pi = stationary_distribution(&mdp, &pi, 1e-13, 1_000_000).unwrap();
        let d_mu = stationary_distribution(&mdp, &mu, 1e-13, 1_000_000).unwrap();
        let data = population_dataset(&mdp, &mu, &d_mu).unwrap();
        let u = learn_sadl(&data, &pi, &[0.5, 0.5], &KernelSpec::state_action_delta(), &SolverParams::default())
            .unwrap();
        for s in 0..3 {
            for a in 0..2 {
                let truth = d_pi.probs()[s] / (d_mu.probs()[s] * mu.prob(s, a));
                assert!((u.value(s, a) - truth).abs() < 1e-2, "({s},{a}): {} vs {truth}", u.value(s, a));
            }
        }
        let norm: f64 = u.values().iter().zip(u.reference()).map(|(x, r)| x * r).sum();
        assert!((norm - 1.0).abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn state_quadratic_is_psd_and_homogeneous(seed in 0u64..1000, c in 0.1f64..10.0) {
            let data = random_dataset(5, 3, 25, seed);
            let (pi, mu) = (random_policy(5, 3, seed + 1), random_policy(5, 3, seed + 2));
            let q = assemble_state_quadratic(&data, &pi, &mu, &KernelSpec::state_delta(), 5).unwrap();
            let a = q.to_dense();
            prop_assert!((&a - a.transpose()).amax() < 1e-10);
            prop_assert!(a.symmetric_eigen().eigenvalues.min() >= -1e-8);
            let omega: Vec<f64> = (0..5).map(|s| 0.2 + s as f64 * 0.3).collect();
            let scaled: Vec<f64> = omega.iter().map(|x| c * x).collect();
            let (d1, dc) = (q.value(&omega), q.value(&scaled));
            prop_assert!((dc - c * c * d1).abs() <= 1e-10 * dc.abs().max(1e-12));
        }

        #[test]
        fn learned_corrections_satisfy_invariants(seed in 0u64..1000) {
            let data = random_dataset(4, 2, 30, seed);
            let pi = random_policy(4, 2, seed + 7);
            let params = SolverParams { iters: 2000, ..Default::default() };
            let omega = learn_emp(&data, &pi, &KernelSpec::state_delta(), &params).unwrap();
            let norm: f64 = omega.values().iter().zip(omega.reference_dist().probs()).map(|(v, d)| v * d).sum();
            prop_assert!((norm - 1.0).abs() < 1e-6);
            prop_assert!(omega.values().iter().all(|&v| v >= 0.0));

            let u = learn_sadl(&data, &pi, &[0.5, 0.5], &KernelSpec::state_action_delta(), &params).unwrap();
            let norm: f64 = u.values().iter().zip(u.reference()).map(|(x, r)| x * r).sum();
            prop_assert!((norm - 1.0).abs() < 1e-6);
            prop_assert!(u.values().iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn state_action_quadratic_is_psd(seed in 0u64..1000) {
            let data = random_dataset(3, 2, 15, seed);
            let pi = random_policy(3, 2, seed + 3);
            let a = assemble_state_action_quadratic(&data, &pi, &[0.4, 0.6], &KernelSpec::state_action_delta(), 3, 2)
                .unwrap()
                .to_dense();
            prop_assert!(a.symmetric_eigen().eigenvalues.min() >= -1e-8);
        }
    }
}
