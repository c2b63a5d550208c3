//! Two-phase reward curriculum scheduling.
//!
//! Phase 0 trains on the base reward alone (`w = 0`). When a switch
//! predicate fires the scheduler enters phase 1 and the auxiliary weight is
//! annealed from 0 to `w_target` over `anneal_steps` environment steps.

mod huber;
mod metrics;
mod switch;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use huber::{huber_fit, huber_fit_slope, HuberFit, MAD_TO_SIGMA};
pub use metrics::{MetricHistory, DEFAULT_CADENCE, DEFAULT_SMOOTHING_WINDOW};
pub use switch::{
    check_actor_fit, check_base_threshold, check_convergence, convergence_slopes, SwitchCriterion,
    SwitchParams,
};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnealSchedule {
    /// Jump straight to the target weight.
    Step,
    Linear,
    Cosine,
}

impl fmt::Display for AnnealSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnnealSchedule::Step => "step",
            AnnealSchedule::Linear => "linear",
            AnnealSchedule::Cosine => "cosine",
        })
    }
}

impl FromStr for AnnealSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(AnnealSchedule::Step),
            "linear" => Ok(AnnealSchedule::Linear),
            "cosine" => Ok(AnnealSchedule::Cosine),
            other => Err(Error::config(format!("unknown anneal schedule `{other}`"))),
        }
    }
}

/// Fraction of the target weight reached `elapsed` steps after the switch.
///
/// A zero duration behaves like [`AnnealSchedule::Step`].
pub fn anneal_factor(schedule: AnnealSchedule, elapsed: u64, duration: u64) -> f64 {
    if duration == 0 {
        return 1.0;
    }
    let progress = (elapsed as f64 / duration as f64).min(1.0);
    match schedule {
        AnnealSchedule::Step => 1.0,
        AnnealSchedule::Linear => progress,
        AnnealSchedule::Cosine => {
            if progress >= 1.0 {
                1.0
            } else {
                0.5 * (1.0 - cos_pi(progress))
            }
        }
    }
}

/// `cos(π·x)` for `x ∈ [0, 1]`, reduced so quarter points are exact.
fn cos_pi(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x <= 0.25 {
        (PI * x).cos()
    } else if x <= 0.75 {
        (PI * (0.5 - x)).sin()
    } else {
        -(PI * (1.0 - x)).cos()
    }
}

/// Phase bookkeeping for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumState {
    phase: u8,
    t_switch: Option<u64>,
    w_target: f64,
    schedule: AnnealSchedule,
    anneal_steps: u64,
    criterion: SwitchCriterion,
}

impl CurriculumState {
    pub fn new(
        w_target: f64,
        schedule: AnnealSchedule,
        anneal_steps: u64,
        criterion: SwitchCriterion,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&w_target) {
            return Err(Error::config(format!("w_target must lie in [0, 1), got {w_target}")));
        }
        Ok(Self {
            phase: 0,
            t_switch: None,
            w_target,
            schedule,
            anneal_steps,
            criterion,
        })
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn t_switch(&self) -> Option<u64> {
        self.t_switch
    }

    pub fn w_target(&self) -> f64 {
        self.w_target
    }

    pub fn schedule(&self) -> AnnealSchedule {
        self.schedule
    }

    pub fn anneal_steps(&self) -> u64 {
        self.anneal_steps
    }

    pub fn criterion(&self) -> SwitchCriterion {
        self.criterion
    }

    /// Enters phase 1 at step `t`. Fails if the switch already happened.
    pub fn switch_at(&mut self, t: u64) -> Result<()> {
        if self.phase == 1 {
            return Err(Error::State(format!(
                "curriculum already switched at step {}",
                self.t_switch.unwrap_or_default()
            )));
        }
        self.phase = 1;
        self.t_switch = Some(t);
        Ok(())
    }

    /// Curriculum weight at global step `t`. Zero before the switch step.
    pub fn current_weight(&self, t: u64) -> f64 {
        match self.t_switch {
            Some(ts) if self.phase == 1 && t >= ts => {
                anneal_factor(self.schedule, t - ts, self.anneal_steps) * self.w_target
            }
            _ => 0.0,
        }
    }

    /// Evaluates the configured switch predicate against `history` at step
    /// `t`. Always false once phase 1 has begun.
    pub fn should_switch(&self, history: &MetricHistory, params: &SwitchParams, t: u64) -> bool {
        if self.phase == 1 {
            return false;
        }
        match self.criterion {
            SwitchCriterion::Fixed(at) => t >= at,
            SwitchCriterion::ActorFit => check_actor_fit(history, params),
            SwitchCriterion::BaseThreshold => check_base_threshold(history, params),
            SwitchCriterion::Convergence => check_convergence(history, params),
        }
    }
}
