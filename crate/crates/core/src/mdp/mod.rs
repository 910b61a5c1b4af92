//! Tabular MDPs, the benchmark environments, rollouts and exact oracles.

pub mod envs;
pub mod qlearning;
pub mod random;
pub mod simulate;
pub mod stationary;
mod types;

pub use envs::{build_gridworld, build_singlepath, build_taxi, Environment};
pub use qlearning::{soften_policy, train_q_learning_policy, train_q_table, QLearningParams, QTable};
pub use random::{random_mdp, random_policy};
pub use simulate::{sample_labeled, sample_multi_behavior, sample_trajectories};
pub use stationary::{average_reward, average_reward_under, stationary_distribution};
pub use types::{StateDistribution, Step, TabularMdp, TabularPolicy, Trajectory, Transition, TransitionDataset};
