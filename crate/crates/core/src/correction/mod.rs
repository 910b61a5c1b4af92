//! Kernelized min-max correction learners reduced to constrained quadratics.

mod kernel;
mod learners;
mod quadratic;
mod solver;

pub use kernel::{KernelKind, KernelSpec};
pub use learners::{
    assemble_state_action_quadratic, assemble_state_quadratic, fit_emp, importance_ratio, learn_bch,
    learn_bch_pooled, learn_emp, learn_sadl, population_dataset, population_dataset_labeled, CorrectionVector,
    EmpFit, StateActionCorrection,
};
pub use quadratic::QuadraticForm;
pub use solver::{solve_normalized_quadratic, SolverParams};
