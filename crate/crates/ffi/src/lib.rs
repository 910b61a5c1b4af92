//! C interface to `ope-core`.
//!
//! Every entry point returns an [`OpeStatus`]; on failure the message is
//! available from [`ope_last_error_message`] on the same thread. Objects are
//! opaque handles created by `*_new*` functions and released with the
//! matching `*_free`. Panics never cross the boundary: they are caught and
//! reported as [`OpeStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use ope_core::correction::{KernelSpec, SolverParams};
use ope_core::harness::{evaluate_method, Method};
use ope_core::mdp::stationary::{DEFAULT_MAX_ITERS, DEFAULT_TOL};
use ope_core::mdp::{
    average_reward, sample_multi_behavior, soften_policy, stationary_distribution, Environment, TabularMdp,
    TabularPolicy, Trajectory,
};
use ope_core::OpeError;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonErgodic = 3,
    Degenerate = 4,
    MissingLabel = 5,
    UnknownMethod = 6,
    UnknownEnvironment = 7,
    Io = 8,
    Panic = 9,
}

/// A tabular MDP.
pub struct OpeMdp(TabularMdp);

/// A row-stochastic tabular policy.
pub struct OpePolicy(TabularPolicy);

/// Logged trajectories, each tagged with the index of its behavior policy.
pub struct OpeDataset(Vec<Trajectory>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: OpeStatus,
    message: String,
}

impl From<OpeError> for Failure {
    fn from(e: OpeError) -> Self {
        let status = match e {
            OpeError::NonErgodicChain { .. } => OpeStatus::NonErgodic,
            OpeError::DegenerateReference => OpeStatus::Degenerate,
            OpeError::MissingLabel { .. } => OpeStatus::MissingLabel,
            OpeError::UnknownMethod(_) => OpeStatus::UnknownMethod,
            OpeError::UnknownEnvironment(_) => OpeStatus::UnknownEnvironment,
            OpeError::InvalidConfig(_) | OpeError::InvalidInput(_) => OpeStatus::InvalidArgument,
            OpeError::Io(_) => OpeStatus::Io,
        };
        Failure { status, message: e.to_string() }
    }
}

fn null(what: &str) -> Failure {
    Failure { status: OpeStatus::NullPointer, message: format!("`{what}` is null") }
}

fn invalid(message: String) -> Failure {
    Failure { status: OpeStatus::InvalidArgument, message }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> OpeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            OpeStatus::Ok
        }
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            OpeStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| invalid(format!("`{what}` is not valid UTF-8")))
}

fn product(dims: &[usize]) -> Result<usize, Failure> {
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| invalid("sizes overflow".into()))
}

unsafe fn read_slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_into(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if len != src.len() {
        return Err(invalid(format!("output buffer holds {len} values, need {}", src.len())));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    slice::from_raw_parts_mut(out, len).copy_from_slice(src);
    Ok(())
}

unsafe fn read_policies(ptr: *const *const OpePolicy, len: usize) -> Result<Vec<TabularPolicy>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if ptr.is_null() {
        return Err(null("behaviors"));
    }
    slice::from_raw_parts(ptr, len).iter().map(|&p| deref(p, "behaviors[i]").map(|p| p.0.clone())).collect()
}

/// Message describing the last failed call on this thread, or an empty
/// string after a successful one. The pointer stays valid until the next
/// call into this library from the same thread.
#[no_mangle]
pub extern "C" fn ope_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds one of the benchmark environments: `"taxi"`, `"gridworld"` or
/// `"singlepath"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ope_mdp_new_env(name: *const c_char, out: *mut *mut OpeMdp) -> OpeStatus {
    guard(|| {
        let env: Environment = read_str(name, "name")?.parse()?;
        write_out(out, OpeMdp(env.build()))
    })
}

/// Builds an MDP from dense arrays: `transition[(s·A + a)·S + s']`,
/// `reward[s·A + a]` and `initial[s]`.
///
/// # Safety
/// The arrays must hold `S·A·S`, `S·A` and `S` doubles respectively.
#[no_mangle]
pub unsafe extern "C" fn ope_mdp_new(
    num_states: usize,
    num_actions: usize,
    transition: *const f64,
    reward: *const f64,
    initial: *const f64,
    out: *mut *mut OpeMdp,
) -> OpeStatus {
    guard(|| {
        let (n, k) = (num_states, num_actions);
        if n == 0 || k == 0 {
            return Err(invalid("need at least one state and one action".into()));
        }
        let t = read_slice(transition, product(&[n, k, n])?, "transition")?;
        let r = read_slice(reward, n * k, "reward")?;
        let d0 = read_slice(initial, n, "initial")?;
        let dense: Vec<Vec<Vec<f64>>> =
            (0..n).map(|s| (0..k).map(|a| t[(s * k + a) * n..(s * k + a + 1) * n].to_vec()).collect()).collect();
        let rewards: Vec<Vec<f64>> = (0..n).map(|s| r[s * k..(s + 1) * k].to_vec()).collect();
        write_out(out, OpeMdp(TabularMdp::from_dense(&dense, &rewards, d0.to_vec())?))
    })
}

/// # Safety
/// `mdp` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ope_mdp_free(mdp: *mut OpeMdp) {
    if !mdp.is_null() {
        drop(Box::from_raw(mdp));
    }
}

/// Number of states, or 0 for a null handle.
///
/// # Safety
/// `mdp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ope_mdp_num_states(mdp: *const OpeMdp) -> usize {
    mdp.as_ref().map_or(0, |m| m.0.num_states())
}

/// Number of actions, or 0 for a null handle.
///
/// # Safety
/// `mdp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ope_mdp_num_actions(mdp: *const OpeMdp) -> usize {
    mdp.as_ref().map_or(0, |m| m.0.num_actions())
}

/// Builds a policy from row-major probabilities `probs[s·A + a]`.
///
/// # Safety
/// `probs` must hold `num_states·num_actions` doubles.
#[no_mangle]
pub unsafe extern "C" fn ope_policy_new(
    num_states: usize,
    num_actions: usize,
    probs: *const f64,
    out: *mut *mut OpePolicy,
) -> OpeStatus {
    guard(|| {
        let p = read_slice(probs, product(&[num_states, num_actions])?, "probs")?;
        write_out(out, OpePolicy(TabularPolicy::new(num_states, num_actions, p.to_vec())?))
    })
}

/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ope_policy_uniform(num_states: usize, num_actions: usize, out: *mut *mut OpePolicy) -> OpeStatus {
    guard(|| {
        if num_states == 0 || num_actions == 0 {
            return Err(invalid("need at least one state and one action".into()));
        }
        write_out(out, OpePolicy(TabularPolicy::uniform(num_states, num_actions)))
    })
}

/// New policy `(1 − epsilon)·policy + epsilon·uniform`.
///
/// # Safety
/// `policy` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ope_policy_soften(
    policy: *const OpePolicy,
    epsilon: f64,
    out: *mut *mut OpePolicy,
) -> OpeStatus {
    guard(|| {
        let p = deref(policy, "policy")?;
        write_out(out, OpePolicy(soften_policy(&p.0, epsilon)?))
    })
}

/// # Safety
/// `policy` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ope_policy_free(policy: *mut OpePolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Copies the row-major probabilities into `out`, which must hold exactly
/// `num_states·num_actions` doubles.
///
/// # Safety
/// `policy` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ope_policy_copy_probs(policy: *const OpePolicy, out: *mut f64, len: usize) -> OpeStatus {
    guard(|| copy_into(deref(policy, "policy")?.0.probs(), out, len))
}

/// Stationary state distribution of the chain `policy` induces on `mdp`.
///
/// # Safety
/// Handles must be live and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ope_stationary_distribution(
    mdp: *const OpeMdp,
    policy: *const OpePolicy,
    out: *mut f64,
    len: usize,
) -> OpeStatus {
    guard(|| {
        let (m, p) = (deref(mdp, "mdp")?, deref(policy, "policy")?);
        if !p.0.matches(&m.0) {
            return Err(invalid("policy shape does not match the MDP".into()));
        }
        let d = stationary_distribution(&m.0, &p.0, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
        copy_into(d.probs(), out, len)
    })
}

/// Exact long-run average reward of `policy` on `mdp`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ope_average_reward(mdp: *const OpeMdp, policy: *const OpePolicy, out: *mut f64) -> OpeStatus {
    guard(|| {
        let (m, p) = (deref(mdp, "mdp")?, deref(policy, "policy")?);
        if !p.0.matches(&m.0) {
            return Err(invalid("policy shape does not match the MDP".into()));
        }
        let value = average_reward(&m.0, &p.0)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = value;
        Ok(())
    })
}

/// Rolls out `num_trajectories` trajectories of `horizon` steps, split
/// evenly across the behaviors; trajectory labels are behavior indices.
///
/// # Safety
/// `behaviors` must point to `num_behaviors` live policy handles.
#[no_mangle]
pub unsafe extern "C" fn ope_dataset_sample(
    mdp: *const OpeMdp,
    behaviors: *const *const OpePolicy,
    num_behaviors: usize,
    num_trajectories: usize,
    horizon: usize,
    seed: u64,
    out: *mut *mut OpeDataset,
) -> OpeStatus {
    guard(|| {
        let m = deref(mdp, "mdp")?;
        let pis = read_policies(behaviors, num_behaviors)?;
        write_out(out, OpeDataset(sample_multi_behavior(&m.0, &pis, num_trajectories, horizon, seed)?))
    })
}

/// Total number of logged transitions, or 0 for a null handle.
///
/// # Safety
/// `dataset` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ope_dataset_num_transitions(dataset: *const OpeDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.iter().map(|t| t.steps.len()).sum())
}

/// # Safety
/// `dataset` must come from this library and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ope_dataset_free(dataset: *mut OpeDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Estimates the average reward of `target` from `dataset` with one of the
/// methods `bch`, `emp`, `bch-pooled`, `bch-kl-pooled`, `emp-single`,
/// `kl-emp`, `sadl`, `mis` or `wis`, using delta kernels and default solver
/// settings. Policy-aware methods read `behaviors`, indexed by trajectory
/// label; the others accept `num_behaviors = 0`.
///
/// # Safety
/// Handles must be live, `method` NUL-terminated, `behaviors` must point to
/// `num_behaviors` handles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ope_estimate(
    dataset: *const OpeDataset,
    target: *const OpePolicy,
    behaviors: *const *const OpePolicy,
    num_behaviors: usize,
    method: *const c_char,
    out: *mut f64,
) -> OpeStatus {
    guard(|| {
        let data = deref(dataset, "dataset")?;
        let pi = deref(target, "target")?;
        let method: Method = read_str(method, "method")?.parse()?;
        let pis = read_policies(behaviors, num_behaviors)?;
        if pis.iter().any(|b| b.num_states() != pi.0.num_states() || b.num_actions() != pi.0.num_actions()) {
            return Err(invalid("behavior shape does not match the target".into()));
        }
        let (n, k) = (pi.0.num_states(), pi.0.num_actions());
        if data.0.iter().flat_map(|t| &t.steps).any(|s| s.state >= n || s.next_state >= n || s.action >= k) {
            return Err(invalid("dataset refers to states or actions outside the target policy".into()));
        }
        let (estimate, _) = evaluate_method(
            method,
            &data.0,
            &pi.0,
            &pis,
            &KernelSpec::state_delta(),
            &KernelSpec::state_action_delta(),
            &SolverParams::default(),
        )?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = estimate;
        Ok(())
    })
}
