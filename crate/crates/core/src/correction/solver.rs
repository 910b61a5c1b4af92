use rand::Rng;

use super::quadratic::QuadraticForm;
use crate::error::{OpeError, Result};
use crate::rng::rng_from_seed;

/// Projected-gradient settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Step size as a multiple of `1/λ_max(A)`.
    pub step: f64,
    pub iters: usize,
    /// Stop once the objective falls by less than this over `window` accepted steps.
    pub tol: f64,
    pub window: usize,
    /// Seeds the power-iteration start vector.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { step: 0.5, iters: 20_000, tol: 1e-12, window: 100, seed: 0 }
    }
}

/// Approximately solves `min xᵀAx` subject to `x ≥ 0` and `reference·x = 1`.
///
/// Starts from the constant feasible point `1/Σ reference` and runs
/// accelerated projected gradient with the exact Euclidean projection onto
/// the constraint set. A candidate that would raise the objective is never
/// accepted: the momentum is dropped first, then the step halved, so
/// accepted iterates are monotone.
pub fn solve_normalized_quadratic(a: &QuadraticForm, reference: &[f64], params: &SolverParams) -> Result<Vec<f64>> {
    let n = a.dimension();
    if reference.len() != n {
        return Err(OpeError::InvalidInput(format!("reference has length {}, form has {n}", reference.len())));
    }
    if reference.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(OpeError::InvalidInput("reference must be finite and nonnegative".into()));
    }
    let mass: f64 = reference.iter().sum();
    if mass <= 0.0 {
        return Err(OpeError::DegenerateReference);
    }
    let mut x = vec![1.0 / mass; n];
    let lambda = max_eigenvalue(a, params.seed);
    if lambda <= 0.0 {
        return Ok(x);
    }

    let mut eta = params.step / lambda;
    // every a* vector caches A times its partner, so each iteration costs one product
    let mut ax = vec![0.0; n];
    a.apply(&x, &mut ax);
    let mut f = dot(&x, &ax);
    let (mut y, mut ay) = (x.clone(), ax.clone());
    let (mut prev, mut a_prev) = (x.clone(), ax.clone());
    let (mut trial, mut a_trial) = (vec![0.0; n], vec![0.0; n]);
    let mut t = 1.0f64;
    let mut history = vec![f];
    for _ in 0..params.iters {
        let mut accepted = None;
        let mut halvings = 0;
        while halvings < 60 {
            for i in 0..n {
                trial[i] = y[i] - eta * 2.0 * ay[i];
            }
            project(&mut trial, reference);
            a.apply(&trial, &mut a_trial);
            let ft = dot(&trial, &a_trial);
            if ft <= f {
                accepted = Some(ft);
                break;
            }
            if t > 1.0 {
                y.copy_from_slice(&x);
                ay.copy_from_slice(&ax);
                t = 1.0;
            } else {
                eta *= 0.5;
                halvings += 1;
            }
        }
        let Some(ft) = accepted else { break };
        std::mem::swap(&mut prev, &mut x);
        std::mem::swap(&mut a_prev, &mut ax);
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut ax, &mut a_trial);
        f = ft;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for i in 0..n {
            y[i] = x[i] + beta * (x[i] - prev[i]);
            ay[i] = ax[i] + beta * (ax[i] - a_prev[i]);
        }
        t = t_next;
        history.push(f);
        if history.len() > params.window && history[history.len() - 1 - params.window] - f < params.tol {
            break;
        }
    }
    Ok(x)
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Power-iteration estimate of the largest eigenvalue of a PSD form.
fn max_eigenvalue(a: &QuadraticForm, seed: u64) -> f64 {
    let n = a.dimension();
    let mut rng = rng_from_seed(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut av = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..500 {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        a.apply(&v, &mut av);
        let next: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
        std::mem::swap(&mut v, &mut av);
        let settled = (next - lambda).abs() <= 1e-6 * next.abs();
        lambda = next;
        if settled {
            break;
        }
    }
    lambda
}

/// Euclidean projection of `y` onto `{x ≥ 0, reference·x = 1}`.
///
/// The minimizer is `x_i = max(y_i − τ·reference_i, 0)` for the unique `τ`
/// meeting the constraint; `τ` is found by scanning the sorted breakpoints
/// `y_i / reference_i`.
fn project(y: &mut [f64], reference: &[f64]) {
    let mut breaks: Vec<(f64, usize)> =
        (0..y.len()).filter(|&i| reference[i] > 0.0).map(|i| (y[i] / reference[i], i)).collect();
    breaks.sort_by(|p, q| q.0.total_cmp(&p.0));
    let (mut s1, mut s2) = (0.0, 0.0);
    let mut tau = 0.0;
    for &(b, i) in &breaks {
        let (n1, n2) = (s1 + reference[i] * y[i], s2 + reference[i] * reference[i]);
        let cand = (n1 - 1.0) / n2;
        if b > cand {
            s1 = n1;
            s2 = n2;
            tau = cand;
        } else {
            break;
        }
    }
    for (yi, &r) in y.iter_mut().zip(reference) {
        *yi = (*yi - tau * r).max(0.0);
    }
}
