use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rewards::{reward_action_magnitude, reward_effort, reward_jerk, reward_smooth, upright_reward};
use super::{check_action, EnvStep, Environment, Outcome, RewardParts, StepInfo};
use crate::numerics::Rng;
use crate::{Error, Result};

pub const SWINGUP_OBS_DIM: usize = 3;

/// Behavioural terms that make up `r_aux`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuxMode {
    /// `−|a|`.
    ActionMagnitude,
    /// Action smoothness plus joint jerk plus effort.
    Behavioral,
}

impl fmt::Display for AuxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuxMode::ActionMagnitude => "action_magnitude",
            AuxMode::Behavioral => "behavioral",
        })
    }
}

impl FromStr for AuxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "action_magnitude" => Ok(AuxMode::ActionMagnitude),
            "behavioral" => Ok(AuxMode::Behavioral),
            other => Err(Error::config(format!("unknown aux mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwingUpConfig {
    pub gravity: f64,
    pub length: f64,
    pub mass: f64,
    pub damping: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub max_steps: u32,
    /// Half-width of the uniform perturbation around the hanging position.
    pub init_noise: f64,
    pub aux_mode: AuxMode,
}

impl Default for SwingUpConfig {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            length: 1.0,
            mass: 1.0,
            damping: 0.0,
            max_torque: 8.0,
            max_speed: 8.0,
            dt: 0.02,
            max_steps: 1000,
            init_noise: 0.1,
            aux_mode: AuxMode::ActionMagnitude,
        }
    }
}

impl SwingUpConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.gravity, self.length, self.mass, self.max_torque, self.max_speed, self.dt];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::config("swingup physical constants must be positive"));
        }
        if !(self.damping >= 0.0 && self.init_noise >= 0.0) || self.max_steps == 0 {
            return Err(Error::config("swingup damping, noise and max_steps out of range"));
        }
        Ok(())
    }
}

/// Torque-limited pendulum that must be swung up and balanced.
///
/// `theta` is measured from upright, so the pole starts near `±π`. The
/// torque limit is too small to lift the pole directly. Episodes only end by
/// timeout. `r_base` is the upright score `(1 + cos θ)/2`; `r_fixed` is zero.
#[derive(Debug, Clone)]
pub struct SwingUp {
    cfg: SwingUpConfig,
    theta: f64,
    theta_dot: f64,
    prev_action: f64,
    steps: u32,
    done: bool,
}

impl SwingUp {
    pub fn new(cfg: SwingUpConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            theta: PI,
            theta_dot: 0.0,
            prev_action: 0.0,
            steps: 0,
            done: true,
        })
    }

    pub fn config(&self) -> &SwingUpConfig {
        &self.cfg
    }

    pub fn state(&self) -> (f64, f64) {
        (self.theta, self.theta_dot)
    }

    /// Sets the pendulum state directly, for tests and scripted rollouts.
    pub fn set_state(&mut self, theta: f64, theta_dot: f64) {
        self.theta = wrap_angle(theta);
        self.theta_dot = theta_dot.clamp(-self.cfg.max_speed, self.cfg.max_speed);
        self.prev_action = 0.0;
        self.steps = 0;
        self.done = false;
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.theta.cos(), self.theta.sin(), self.theta_dot / self.cfg.max_speed]
    }
}

impl Environment for SwingUp {
    fn obs_dim(&self) -> usize {
        SWINGUP_OBS_DIM
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, rng: &mut Rng) -> Result<Vec<f64>> {
        let n = self.cfg.init_noise;
        let theta = PI + if n > 0.0 { rng.uniform_range(-n, n) } else { 0.0 };
        let theta_dot = if n > 0.0 { rng.uniform_range(-n, n) } else { 0.0 };
        self.set_state(theta, theta_dot);
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        check_action(action, 1)?;
        if self.done {
            return Err(Error::State("step called on a finished episode; reset first".into()));
        }
        let c = &self.cfg;
        let a = action[0].clamp(-1.0, 1.0);
        let prev_theta_dot = self.theta_dot;

        let accel = c.gravity / c.length * self.theta.sin() + a * c.max_torque / (c.mass * c.length * c.length)
            - c.damping * self.theta_dot;
        self.theta_dot = (self.theta_dot + accel * c.dt).clamp(-c.max_speed, c.max_speed);
        self.theta = wrap_angle(self.theta + self.theta_dot * c.dt);
        self.steps += 1;

        let r_base = upright_reward(self.theta);
        let mut raw_terms = BTreeMap::from([("upright", r_base)]);
        let r_aux = match c.aux_mode {
            AuxMode::ActionMagnitude => {
                let r = reward_action_magnitude(&[a]);
                raw_terms.insert("action_magnitude", r);
                r
            }
            AuxMode::Behavioral => {
                let smooth = reward_smooth(&[a], &[self.prev_action]);
                let jerk = reward_jerk(&[self.theta_dot], &[prev_theta_dot]);
                let effort = reward_effort(&[a]);
                raw_terms.insert("smooth", smooth);
                raw_terms.insert("jerk", jerk);
                raw_terms.insert("effort", effort);
                smooth + jerk + effort
            }
        };
        self.prev_action = a;

        let truncated = self.steps >= c.max_steps;
        self.done = truncated;
        Ok(EnvStep {
            next_observation: self.observation(),
            reward: RewardParts { r_fixed: 0.0, r_base, r_aux },
            terminated: false,
            truncated,
            info: StepInfo {
                outcome: if truncated { Outcome::Timeout } else { Outcome::Running },
                raw_terms,
            },
        })
    }
}

fn wrap_angle(a: f64) -> f64 {
    let x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x + 2.0 * PI
    } else {
        x
    }
}
