//! Environments with split reward channels.
//!
//! Every step reports three reward channels: `r_fixed` (outside the
//! curriculum blend), `r_base` (the task reward) and `r_aux` (behavioural
//! terms). Learners never see a pre-mixed reward.

mod pointgoal;
pub mod rewards;
mod scenario;
mod swingup;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use pointgoal::{PointGoal, PointGoalConfig, TrackingReward, POINTGOAL_OBS_DIM, RAY_COUNT};
pub use scenario::{Obstacle, Scenario};
pub use swingup::{AuxMode, SwingUp, SwingUpConfig, SWINGUP_OBS_DIM};

use crate::numerics::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Running,
    Goal,
    Timeout,
    Collision,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Running => "running",
            Outcome::Goal => "goal",
            Outcome::Timeout => "timeout",
            Outcome::Collision => "collision",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardParts {
    pub r_fixed: f64,
    pub r_base: f64,
    pub r_aux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub outcome: Outcome,
    /// Unscaled reward terms by name, for logging and tests.
    pub raw_terms: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub next_observation: Vec<f64>,
    pub reward: RewardParts,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

impl EnvStep {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn reset(&mut self, rng: &mut Rng) -> Result<Vec<f64>>;
    /// Advances one step. Actions outside `[-1, 1]` are clipped.
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvKind {
    PointGoal,
    SwingUp,
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::PointGoal => "pointgoal",
            EnvKind::SwingUp => "swingup",
        })
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointgoal" => Ok(EnvKind::PointGoal),
            "swingup" => Ok(EnvKind::SwingUp),
            other => Err(Error::config(format!("unknown environment `{other}`"))),
        }
    }
}

/// Either built-in environment behind one type.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    PointGoal(PointGoal),
    SwingUp(SwingUp),
}

impl Environment for AnyEnv {
    fn obs_dim(&self) -> usize {
        match self {
            AnyEnv::PointGoal(e) => e.obs_dim(),
            AnyEnv::SwingUp(e) => e.obs_dim(),
        }
    }

    fn act_dim(&self) -> usize {
        match self {
            AnyEnv::PointGoal(e) => e.act_dim(),
            AnyEnv::SwingUp(e) => e.act_dim(),
        }
    }

    fn reset(&mut self, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            AnyEnv::PointGoal(e) => e.reset(rng),
            AnyEnv::SwingUp(e) => e.reset(rng),
        }
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        match self {
            AnyEnv::PointGoal(e) => e.step(action),
            AnyEnv::SwingUp(e) => e.step(action),
        }
    }
}

pub(crate) fn check_action(action: &[f64], dim: usize) -> Result<()> {
    if action.len() != dim {
        return Err(Error::config(format!("expected {dim} action components, got {}", action.len())));
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::NonFinite("action".into()));
    }
    Ok(())
}
