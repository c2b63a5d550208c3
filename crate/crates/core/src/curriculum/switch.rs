//! Phase-switch predicates. Each is a pure function of the metric history.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::huber::huber_fit_slope;
use super::metrics::MetricHistory;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchCriterion {
    /// Actor loss below `gamma_fit` for `m_fit` consecutive samples.
    ActorFit,
    /// Latest mean base reward at or above `gamma_rbase`.
    BaseThreshold,
    /// Smoothed base reward has plateaued above the random-policy level.
    Convergence,
    /// Switch unconditionally at the given environment step.
    Fixed(u64),
}

impl fmt::Display for SwitchCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SwitchCriterion::ActorFit => f.write_str("actor_fit"),
            SwitchCriterion::BaseThreshold => f.write_str("base_threshold"),
            SwitchCriterion::Convergence => f.write_str("convergence"),
            SwitchCriterion::Fixed(t) => write!(f, "fixed:{t}"),
        }
    }
}

impl FromStr for SwitchCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "actor_fit" => Ok(SwitchCriterion::ActorFit),
            "base_threshold" => Ok(SwitchCriterion::BaseThreshold),
            "convergence" => Ok(SwitchCriterion::Convergence),
            other => match other.strip_prefix("fixed:") {
                Some(t) => t
                    .trim()
                    .parse()
                    .map(SwitchCriterion::Fixed)
                    .map_err(|_| Error::config(format!("bad fixed switch step `{t}`"))),
                None => Err(Error::config(format!("unknown switch criterion `{other}`"))),
            },
        }
    }
}

/// Thresholds and windows for the switch predicates. Windows count metric
/// samples, not environment steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchParams {
    pub gamma_fit: f64,
    pub m_fit: usize,
    pub gamma_rbase: f64,
    pub eps_slope: f64,
    pub m_conv: usize,
    pub eps_huber: f64,
    pub regression_window: usize,
    pub improvement_factor: f64,
}

impl Default for SwitchParams {
    fn default() -> Self {
        Self {
            gamma_fit: -50.0,
            m_fit: 20,
            gamma_rbase: 0.5,
            eps_slope: 0.001,
            m_conv: 10,
            eps_huber: 1.35,
            regression_window: 75,
            improvement_factor: 1.5,
        }
    }
}

impl SwitchParams {
    pub fn validate(&self) -> Result<()> {
        if self.m_fit == 0 || self.m_conv == 0 || self.regression_window < 2 {
            return Err(Error::config("switch windows must be positive (regression window ≥ 2)"));
        }
        if !(self.eps_slope > 0.0 && self.eps_huber > 0.0) {
            return Err(Error::config("eps_slope and eps_huber must be positive"));
        }
        Ok(())
    }
}

/// True iff the last `m_fit` actor-loss samples all exist and lie strictly
/// below `gamma_fit`.
pub fn check_actor_fit(h: &MetricHistory, p: &SwitchParams) -> bool {
    let losses = h.actor_losses();
    if p.m_fit == 0 || losses.len() < p.m_fit {
        return false;
    }
    losses[losses.len() - p.m_fit..]
        .iter()
        .all(|&(_, l)| matches!(l, Some(v) if v < p.gamma_fit))
}

pub fn check_base_threshold(h: &MetricHistory, p: &SwitchParams) -> bool {
    h.latest_base_mean().is_some_and(|r| r >= p.gamma_rbase)
}

/// Huber slopes of the smoothed base reward over the trailing regression
/// windows ending at each of the last `m_conv` samples, oldest first.
/// Regression x values are window-local sample indices `0..window`.
///
/// Returns `None` until all `m_conv` windows are full.
pub fn convergence_slopes(h: &MetricHistory, p: &SwitchParams) -> Option<Vec<f64>> {
    let s = h.smoothed_base();
    let win = p.regression_window;
    if win < 2 || p.m_conv == 0 || s.len() < win + p.m_conv - 1 {
        return None;
    }
    let mut slopes = Vec::with_capacity(p.m_conv);
    for end in s.len() - p.m_conv + 1..=s.len() {
        let window: Vec<(f64, f64)> = s[end - win..end]
            .iter()
            .enumerate()
            .map(|(i, &(_, v))| (i as f64, v))
            .collect();
        slopes.push(huber_fit_slope(&window, p.eps_huber).ok()?);
    }
    Some(slopes)
}

/// Plateau detection: the last `m_conv` slopes are all below `eps_slope`
/// and the latest base mean beats the warm-up baseline by
/// `improvement_factor`.
pub fn check_convergence(h: &MetricHistory, p: &SwitchParams) -> bool {
    let (Some(latest), Some(init)) = (h.latest_base_mean(), h.init_baseline()) else {
        return false;
    };
    if latest <= p.improvement_factor * init {
        return false;
    }
    convergence_slopes(h, p).is_some_and(|slopes| slopes.iter().all(|&b| b < p.eps_slope))
}
