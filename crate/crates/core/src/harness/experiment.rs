use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Method};
use crate::correction::{fit_emp, learn_sadl, CorrectionVector, KernelSpec, SolverParams};
use crate::error::{OpeError, Result};
use crate::estimators::{
    balanced_heuristic, bch_estimate, bch_kl_pooled_estimate, bch_pooled_estimate, emp_estimate,
    emp_single_estimate, kl_emp_estimate, mis_reward_estimate, sadl_reward_estimate, stepwise_wis_estimate,
};
use crate::mdp::{
    average_reward_under, sample_multi_behavior, soften_policy, stationary_distribution, stationary::DEFAULT_MAX_ITERS,
    stationary::DEFAULT_TOL, train_q_table, Environment, StateDistribution, TabularMdp, TabularPolicy, Trajectory,
    TransitionDataset,
};
use crate::policy_estimation::{empirical_state_distribution, WeightVector};
use crate::rng::{derive_seed, label_id};

/// One (method, sweep point, repetition) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub environment: String,
    pub method: String,
    pub num_trajectories: usize,
    pub horizon: usize,
    pub seed: usize,
    pub estimate: f64,
    pub true_value: f64,
    pub squared_error: f64,
    pub tv_distance: Option<f64>,
    pub wall_time_ms: u64,
}

/// `½ Σ |estimated(s) − truth(s)|`.
pub fn tv_distance(estimated: &StateDistribution, truth: &StateDistribution) -> f64 {
    debug_assert_eq!(estimated.len(), truth.len());
    0.5 * estimated.probs().iter().zip(truth.probs()).map(|(p, q)| (p - q).abs()).sum::<f64>()
}

/// Environment, policies and exact oracles shared by every cell of a run.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub environment: Environment,
    pub mdp: TabularMdp,
    pub target: TabularPolicy,
    pub behaviors: Vec<TabularPolicy>,
    pub target_stationary: StateDistribution,
    pub true_value: f64,
}

impl ExperimentSetup {
    /// Trains one Q-table from the master seed and softens it into the target
    /// and behavior policies.
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        let mdp = config.environment.build();
        let table = train_q_table(&mdp, &config.q_learning, derive_seed(config.master_seed, &[label_id("policy")]))?;
        let greedy = table.greedy_policy();
        let target = soften_policy(&greedy, config.target_epsilon)?;
        let behaviors =
            config.behavior_epsilons.iter().map(|&e| soften_policy(&greedy, e)).collect::<Result<Vec<_>>>()?;
        let target_stationary = stationary_distribution(&mdp, &target, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
        for b in &behaviors {
            stationary_distribution(&mdp, b, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
        }
        let true_value = average_reward_under(&mdp, &target, &target_stationary);
        Ok(Self { environment: config.environment, mdp, target, behaviors, target_stationary, true_value })
    }

    /// Logged data for one sweep point; independent of the method so every
    /// method in a cell sees the same trajectories.
    pub fn sample(&self, master_seed: u64, num_trajectories: usize, horizon: usize, rep: usize) -> Result<Vec<Trajectory>> {
        let seed = derive_seed(master_seed, &[num_trajectories as u64, horizon as u64, rep as u64]);
        sample_multi_behavior(&self.mdp, &self.behaviors, num_trajectories, horizon, seed)
    }

    /// Runs one method on one batch of trajectories, returning the estimate
    /// and, for methods that learn a pooled state correction, its TV distance.
    pub fn evaluate(
        &self,
        config: &ExperimentConfig,
        method: Method,
        trajectories: &[Trajectory],
    ) -> Result<(f64, Option<f64>)> {
        let (estimate, omega) = evaluate_method(
            method,
            trajectories,
            &self.target,
            &self.behaviors,
            &config.kernel.state_kernel(self.environment),
            &config.kernel.state_action_kernel(self.environment),
            &config.solver,
        )?;
        Ok((estimate, omega.map(|w| self.tv_of(&w))))
    }

    fn tv_of(&self, omega: &CorrectionVector) -> f64 {
        tv_distance(&omega.implied_distribution(), &self.target_stationary)
    }
}

fn need_behaviors(method: Method, behaviors: &[TabularPolicy]) -> Result<()> {
    if behaviors.is_empty() {
        return Err(OpeError::InvalidInput(format!("method `{method}` needs the exact behavior policies")));
    }
    Ok(())
}

/// Runs one method on logged trajectories.
///
/// `behaviors` are the exact logging policies indexed by trajectory label;
/// only the policy-aware methods (bch, bch-pooled, bch-kl-pooled, wis) read
/// them. The learned pooled state correction is returned alongside the
/// estimate when the method produces one.
pub fn evaluate_method(
    method: Method,
    trajectories: &[Trajectory],
    target: &TabularPolicy,
    behaviors: &[TabularPolicy],
    kernel: &KernelSpec,
    state_action_kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<(f64, Option<CorrectionVector>)> {
    let data = TransitionDataset::from_trajectories(trajectories);
    let pooled = |(est, omega): (f64, CorrectionVector)| (est, Some(omega));
    Ok(match method {
        Method::Bch if behaviors.len() == 1 => pooled(bch_estimate(&data, target, &behaviors[0], kernel, params)?),
        Method::Bch => {
            need_behaviors(method, behaviors)?;
            // one exact-policy learner per behavior, averaged
            let mut total = 0.0;
            let mut used = 0;
            for (j, pi_j) in behaviors.iter().enumerate() {
                let subset = data.subset_with_label(j);
                if !subset.is_empty() {
                    total += bch_estimate(&subset, target, pi_j, kernel, params)?.0;
                    used += 1;
                }
            }
            if used == 0 {
                return Err(OpeError::InvalidInput("no records carry a known behavior label".into()));
            }
            (total / used as f64, None)
        }
        Method::Emp => pooled(emp_estimate(&data, target, kernel, params)?),
        Method::BchPooled => {
            need_behaviors(method, behaviors)?;
            pooled(bch_pooled_estimate(&data, target, behaviors, kernel, params)?)
        }
        Method::BchKlPooled => {
            need_behaviors(method, behaviors)?;
            pooled(bch_kl_pooled_estimate(&data, target, behaviors, kernel, params)?)
        }
        Method::EmpSingle => (emp_single_estimate(&data, target, kernel, params)?, None),
        Method::KlEmp => pooled(kl_emp_estimate(&data, target, kernel, params)?),
        Method::Sadl => {
            let k = target.num_actions();
            let nu = vec![1.0 / k as f64; k];
            let u = learn_sadl(&data, target, &nu, state_action_kernel, params)?;
            (sadl_reward_estimate(&data, &u, target)?, None)
        }
        Method::Mis => (mis_estimate(&data, target, kernel, params)?, None),
        Method::Wis => {
            need_behaviors(method, behaviors)?;
            (stepwise_wis_estimate(trajectories, target, behaviors)?, None)
        }
    })
}

/// MIS with per-label EMP corrections, per-label MLE policies and a
/// balanced heuristic built from per-label empirical state frequencies.
fn mis_estimate(
    data: &TransitionDataset,
    target: &TabularPolicy,
    kernel: &KernelSpec,
    params: &SolverParams,
) -> Result<f64> {
    data.require_labels()?;
    let n = target.num_states();
    let counts = data.counts_per_label();
    let (mut omegas, mut policies, mut dists) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..counts.len() {
        let subset = data.subset_with_label(j);
        if subset.is_empty() {
            return Err(OpeError::InvalidInput(format!("label {j} has no records")));
        }
        let fit = fit_emp(&subset, target, kernel, params)?;
        dists.push(empirical_state_distribution(&subset, n)?);
        omegas.push(fit.correction);
        policies.push(fit.estimated_behavior);
    }
    let h = balanced_heuristic(&WeightVector::from_counts(counts)?, &dists)?;
    mis_reward_estimate(data, &omegas, &policies, target, &h)
}

/// Runs every (num_trajectories, horizon, repetition) cell, each method on
/// the cell's shared data, and returns records sorted by
/// (environment, method, num_trajectories, horizon, seed).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    config.validate()?;
    let setup = ExperimentSetup::prepare(config)?;
    let cells: Vec<(usize, usize, usize)> = config
        .num_trajectories
        .iter()
        .flat_map(|&n| config.horizons.iter().flat_map(move |&h| (0..config.seeds).map(move |r| (n, h, r))))
        .collect();
    let run_cell = |&(n, h, rep): &(usize, usize, usize)| -> Result<Vec<ResultRecord>> {
        let trajectories = setup.sample(config.master_seed, n, h, rep)?;
        config
            .methods
            .iter()
            .map(|&method| {
                let start = Instant::now();
                let (estimate, tv) = setup.evaluate(config, method, &trajectories)?;
                let wall = if config.record_wall_time { start.elapsed().as_millis() as u64 } else { 0 };
                Ok(ResultRecord {
                    environment: setup.environment.name().to_string(),
                    method: method.id().to_string(),
                    num_trajectories: n,
                    horizon: h,
                    seed: rep,
                    estimate,
                    true_value: setup.true_value,
                    squared_error: (estimate - setup.true_value).powi(2),
                    tv_distance: tv,
                    wall_time_ms: wall,
                })
            })
            .collect()
    };
    let nested: Vec<Vec<ResultRecord>> = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| OpeError::InvalidConfig(format!("cannot start {w} workers: {e}")))?
            .install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?,
        None => cells.par_iter().map(run_cell).collect::<Result<_>>()?,
    };
    let mut records: Vec<ResultRecord> = nested.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

pub(crate) fn sort_records(records: &mut [ResultRecord]) {
    records.sort_by(|a, b| {
        (&a.environment, &a.method, a.num_trajectories, a.horizon, a.seed)
            .cmp(&(&b.environment, &b.method, b.num_trajectories, b.horizon, b.seed))
    });
}
