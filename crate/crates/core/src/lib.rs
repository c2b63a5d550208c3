//! Two-stage reward curriculum for off-policy actor-critic learning.
//!
//! Training starts on the task-defining base reward only. Once a switch
//! predicate fires (actor fit, base-reward threshold, or base-reward
//! convergence), auxiliary behavioural rewards are annealed in up to a target
//! weight. Transitions keep their reward channels separate so the replay
//! buffer can recompose rewards with whatever weight is current.
//!
//! The crate is organised as:
//!
//! - [`numerics`]: small MLPs with analytic backprop, Adam, Polyak averaging,
//!   squashed Gaussian policy heads and a seeded RNG.
//! - [`replay`]: ring-buffer replay with per-channel rewards.
//! - [`curriculum`]: annealing schedules, the weight function, the switch
//!   predicates and the Huber slope estimator.
//! - [`agents`]: TD3 and SAC learners.
//! - [`envs`]: the PointGoal navigation and SwingUp pendulum environments.
//! - [`trainer`]: the training loop, evaluation, reset ablations and logging.
//! - [`cli`]: config parsing, ablation sweeps, Savitzky-Golay smoothing and
//!   SVG plots behind the `rcurriculum` binary.

pub mod agents;
pub mod cli;
pub mod curriculum;
pub mod envs;
mod error;
pub mod numerics;
pub mod replay;
pub mod trainer;

pub use error::{Error, Result};
