//! Off-policy evaluation of average reward through learned stationary
//! distribution corrections.
//!
//! The crate covers tabular MDPs and their exact oracles ([`mdp`]), behavior
//! policy estimation ([`policy_estimation`]), kernelized correction learners
//! ([`correction`]), average-reward estimators ([`estimators`]) and an
//! experiment harness ([`harness`]).

pub mod correction;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod mdp;
pub mod policy_estimation;
pub mod rng;

pub use error::{OpeError, Result};
