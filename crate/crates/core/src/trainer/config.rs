use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agents::{AgentConfig, AgentKind};
use crate::curriculum::{AnnealSchedule, SwitchCriterion, SwitchParams, DEFAULT_CADENCE, DEFAULT_SMOOTHING_WINDOW};
use crate::envs::{EnvKind, PointGoalConfig, SwingUpConfig, TrackingReward};
use crate::replay::DEFAULT_CAPACITY;
use crate::{Error, Result};

/// What happens to learner state at the phase switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResetAblation {
    None,
    ResetBuffer,
    ResetNetworks,
}

impl fmt::Display for ResetAblation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResetAblation::None => "none",
            ResetAblation::ResetBuffer => "reset_buffer_on_switch",
            ResetAblation::ResetNetworks => "reset_networks_on_switch",
        })
    }
}

impl FromStr for ResetAblation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ResetAblation::None),
            "reset_buffer_on_switch" => Ok(ResetAblation::ResetBuffer),
            "reset_networks_on_switch" => Ok(ResetAblation::ResetNetworks),
            other => Err(Error::config(format!("unknown reset mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    /// When false the run is a plain baseline trained on `w_target` from the
    /// first step and never switches.
    pub enabled: bool,
    pub w_target: f64,
    pub schedule: AnnealSchedule,
    pub anneal_steps: u64,
    pub criterion: SwitchCriterion,
    pub switch: SwitchParams,
    pub cadence: u64,
    pub smoothing: usize,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            w_target: 0.5,
            schedule: AnnealSchedule::Linear,
            anneal_steps: 40_000,
            criterion: SwitchCriterion::Convergence,
            switch: SwitchParams::default(),
            cadence: DEFAULT_CADENCE,
            smoothing: DEFAULT_SMOOTHING_WINDOW,
        }
    }
}

/// Full specification of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub agent: AgentKind,
    pub env: EnvKind,
    pub seed: u64,
    pub total_steps: u64,
    pub warmup_steps: u64,
    /// Gradient updates per environment step after warm-up.
    pub replay_ratio: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub eval_every: u64,
    pub eval_episodes: usize,
    /// Zero writes only the final checkpoint.
    pub checkpoint_every: u64,
    /// Trailing steps averaged for final-performance summaries.
    pub final_window: u64,
    pub reset: ResetAblation,
    pub agent_cfg: AgentConfig,
    pub curriculum: CurriculumConfig,
    pub pointgoal: PointGoalConfig,
    pub swingup: SwingUpConfig,
    pub scenario: Option<PathBuf>,
}

impl TrainConfig {
    /// Desk-scale defaults for `env`.
    pub fn for_env(env: EnvKind) -> Self {
        let total_steps = match env {
            EnvKind::PointGoal => 300_000,
            EnvKind::SwingUp => 200_000,
        };
        Self {
            agent: AgentKind::Sac,
            env,
            seed: 0,
            total_steps,
            warmup_steps: 10_000,
            replay_ratio: 1.0,
            batch_size: 256,
            buffer_capacity: DEFAULT_CAPACITY,
            eval_every: 10_000,
            eval_episodes: 20,
            checkpoint_every: 0,
            final_window: 50_000,
            reset: ResetAblation::None,
            agent_cfg: AgentConfig::default(),
            curriculum: CurriculumConfig::default(),
            pointgoal: PointGoalConfig::default(),
            swingup: SwingUpConfig::default(),
            scenario: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_steps <= self.warmup_steps {
            return Err(Error::config("total_steps must exceed warmup_steps"));
        }
        if !(self.replay_ratio > 0.0 && self.replay_ratio.is_finite()) {
            return Err(Error::config("replay_ratio must be positive"));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return Err(Error::config("batch_size must be positive and fit in the buffer"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes must be positive"));
        }
        let c = &self.curriculum;
        if !(0.0..1.0).contains(&c.w_target) {
            return Err(Error::config(format!("w_target must lie in [0, 1), got {}", c.w_target)));
        }
        if c.cadence == 0 || c.smoothing == 0 {
            return Err(Error::config("metric cadence and smoothing window must be positive"));
        }
        c.switch.validate()?;
        self.agent_cfg.validate()?;
        self.pointgoal.validate()?;
        self.swingup.validate()?;
        Ok(())
    }

    /// Sets one dotted key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let a = &mut self.agent_cfg;
        let c = &mut self.curriculum;
        let p = &mut self.pointgoal;
        let s = &mut self.swingup;
        match key {
            "run.agent" => self.agent = v.parse()?,
            "run.env" => self.env = v.parse()?,
            "run.seed" => self.seed = num(key, v)?,
            "run.total_steps" => self.total_steps = num(key, v)?,
            "run.warmup_steps" => self.warmup_steps = num(key, v)?,
            "run.eval_every" => self.eval_every = num(key, v)?,
            "run.eval_episodes" => self.eval_episodes = num(key, v)?,
            "run.checkpoint_every" => self.checkpoint_every = num(key, v)?,
            "run.final_window" => self.final_window = num(key, v)?,
            "run.reset" => self.reset = v.parse()?,
            "train.replay_ratio" => self.replay_ratio = num(key, v)?,
            "train.batch_size" => self.batch_size = num(key, v)?,
            "train.buffer_capacity" => self.buffer_capacity = num(key, v)?,
            "agent.hidden" => {
                a.hidden = v
                    .split(',')
                    .map(|x| num(key, x.trim()))
                    .collect::<Result<Vec<usize>>>()?;
            }
            "agent.gamma" => a.gamma = num(key, v)?,
            "agent.tau" => a.tau = num(key, v)?,
            "agent.actor_lr" => a.actor_lr = num(key, v)?,
            "agent.critic_lr" => a.critic_lr = num(key, v)?,
            "agent.alpha_lr" => a.alpha_lr = num(key, v)?,
            "agent.target_noise" => a.target_noise = num(key, v)?,
            "agent.noise_clip" => a.noise_clip = num(key, v)?,
            "agent.policy_delay" => a.policy_delay = num(key, v)?,
            "agent.sigma_start" => a.exploration.sigma_start = num(key, v)?,
            "agent.sigma_end" => a.exploration.sigma_end = num(key, v)?,
            "agent.sigma_anneal_steps" => a.exploration.anneal_steps = num(key, v)?,
            "agent.alpha_init" => a.alpha_init = num(key, v)?,
            "agent.target_entropy" => {
                a.target_entropy = if v == "auto" { None } else { Some(num(key, v)?) };
            }
            "curriculum.enabled" => c.enabled = num(key, v)?,
            "curriculum.w_target" => c.w_target = num(key, v)?,
            "curriculum.schedule" => c.schedule = v.parse()?,
            "curriculum.anneal_steps" => c.anneal_steps = num(key, v)?,
            "curriculum.criterion" => c.criterion = v.parse()?,
            "curriculum.cadence" => c.cadence = num(key, v)?,
            "curriculum.smoothing" => c.smoothing = num(key, v)?,
            "curriculum.gamma_fit" => c.switch.gamma_fit = num(key, v)?,
            "curriculum.m_fit" => c.switch.m_fit = num(key, v)?,
            "curriculum.gamma_rbase" => c.switch.gamma_rbase = num(key, v)?,
            "curriculum.eps_slope" => c.switch.eps_slope = num(key, v)?,
            "curriculum.m_conv" => c.switch.m_conv = num(key, v)?,
            "curriculum.eps_huber" => c.switch.eps_huber = num(key, v)?,
            "curriculum.regression_window" => c.switch.regression_window = num(key, v)?,
            "curriculum.improvement_factor" => c.switch.improvement_factor = num(key, v)?,
            "pointgoal.half_size" => p.half_size = num(key, v)?,
            "pointgoal.dt" => p.dt = num(key, v)?,
            "pointgoal.v_max" => p.v_max = num(key, v)?,
            "pointgoal.v_ref" => p.v_ref = num(key, v)?,
            "pointgoal.kappa" => p.kappa = num(key, v)?,
            "pointgoal.d_track_max" => p.d_track_max = num(key, v)?,
            "pointgoal.goal_radius" => p.goal_radius = num(key, v)?,
            "pointgoal.max_steps" => p.max_steps = num(key, v)?,
            "pointgoal.goal_bonus" => p.goal_bonus = num(key, v)?,
            "pointgoal.shaping_scale" => p.shaping_scale = num(key, v)?,
            "pointgoal.aux_scale" => p.aux_scale = num(key, v)?,
            "pointgoal.robot_radius" => p.robot_radius = num(key, v)?,
            "pointgoal.max_lin_accel" => p.max_lin_accel = num(key, v)?,
            "pointgoal.max_ang_accel" => p.max_ang_accel = num(key, v)?,
            "pointgoal.max_ang_rate" => p.max_ang_rate = num(key, v)?,
            "pointgoal.ray_range" => p.ray_range = num(key, v)?,
            "pointgoal.num_obstacles" => p.num_obstacles = num(key, v)?,
            "pointgoal.obstacle_radius_min" => p.obstacle_radius_min = num(key, v)?,
            "pointgoal.obstacle_radius_max" => p.obstacle_radius_max = num(key, v)?,
            "pointgoal.start_goal_min_dist" => p.start_goal_min_dist = num(key, v)?,
            "pointgoal.start_goal_max_dist" => p.start_goal_max_dist = num(key, v)?,
            "pointgoal.heading_noise" => p.heading_noise = num(key, v)?,
            "pointgoal.tracking" => {
                p.tracking = match v {
                    "penalize" => TrackingReward::Penalize,
                    "literal" => TrackingReward::Literal,
                    other => return Err(Error::config(format!("unknown tracking mode `{other}`"))),
                }
            }
            "pointgoal.scenario" => self.scenario = (!v.is_empty() && v != "none").then(|| PathBuf::from(v)),
            "swingup.gravity" => s.gravity = num(key, v)?,
            "swingup.length" => s.length = num(key, v)?,
            "swingup.mass" => s.mass = num(key, v)?,
            "swingup.damping" => s.damping = num(key, v)?,
            "swingup.max_torque" => s.max_torque = num(key, v)?,
            "swingup.max_speed" => s.max_speed = num(key, v)?,
            "swingup.dt" => s.dt = num(key, v)?,
            "swingup.max_steps" => s.max_steps = num(key, v)?,
            "swingup.init_noise" => s.init_noise = num(key, v)?,
            "swingup.aux_mode" => s.aux_mode = v.parse()?,
            other => return Err(Error::config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in a fixed order. Feeding the pairs
    /// back through [`TrainConfig::set`] reproduces the config.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let a = &self.agent_cfg;
        let c = &self.curriculum;
        let p = &self.pointgoal;
        let s = &self.swingup;
        let hidden: Vec<String> = a.hidden.iter().map(|h| h.to_string()).collect();
        vec![
            ("run.agent", self.agent.to_string()),
            ("run.env", self.env.to_string()),
            ("run.seed", self.seed.to_string()),
            ("run.total_steps", self.total_steps.to_string()),
            ("run.warmup_steps", self.warmup_steps.to_string()),
            ("run.eval_every", self.eval_every.to_string()),
            ("run.eval_episodes", self.eval_episodes.to_string()),
            ("run.checkpoint_every", self.checkpoint_every.to_string()),
            ("run.final_window", self.final_window.to_string()),
            ("run.reset", self.reset.to_string()),
            ("train.replay_ratio", self.replay_ratio.to_string()),
            ("train.batch_size", self.batch_size.to_string()),
            ("train.buffer_capacity", self.buffer_capacity.to_string()),
            ("agent.hidden", hidden.join(",")),
            ("agent.gamma", a.gamma.to_string()),
            ("agent.tau", a.tau.to_string()),
            ("agent.actor_lr", a.actor_lr.to_string()),
            ("agent.critic_lr", a.critic_lr.to_string()),
            ("agent.alpha_lr", a.alpha_lr.to_string()),
            ("agent.target_noise", a.target_noise.to_string()),
            ("agent.noise_clip", a.noise_clip.to_string()),
            ("agent.policy_delay", a.policy_delay.to_string()),
            ("agent.sigma_start", a.exploration.sigma_start.to_string()),
            ("agent.sigma_end", a.exploration.sigma_end.to_string()),
            ("agent.sigma_anneal_steps", a.exploration.anneal_steps.to_string()),
            ("agent.alpha_init", a.alpha_init.to_string()),
            (
                "agent.target_entropy",
                a.target_entropy.map_or_else(|| "auto".to_string(), |h| h.to_string()),
            ),
            ("curriculum.enabled", c.enabled.to_string()),
            ("curriculum.w_target", c.w_target.to_string()),
            ("curriculum.schedule", c.schedule.to_string()),
            ("curriculum.anneal_steps", c.anneal_steps.to_string()),
            ("curriculum.criterion", c.criterion.to_string()),
            ("curriculum.cadence", c.cadence.to_string()),
            ("curriculum.smoothing", c.smoothing.to_string()),
            ("curriculum.gamma_fit", c.switch.gamma_fit.to_string()),
            ("curriculum.m_fit", c.switch.m_fit.to_string()),
            ("curriculum.gamma_rbase", c.switch.gamma_rbase.to_string()),
            ("curriculum.eps_slope", c.switch.eps_slope.to_string()),
            ("curriculum.m_conv", c.switch.m_conv.to_string()),
            ("curriculum.eps_huber", c.switch.eps_huber.to_string()),
            ("curriculum.regression_window", c.switch.regression_window.to_string()),
            ("curriculum.improvement_factor", c.switch.improvement_factor.to_string()),
            ("pointgoal.half_size", p.half_size.to_string()),
            ("pointgoal.dt", p.dt.to_string()),
            ("pointgoal.v_max", p.v_max.to_string()),
            ("pointgoal.v_ref", p.v_ref.to_string()),
            ("pointgoal.kappa", p.kappa.to_string()),
            ("pointgoal.d_track_max", p.d_track_max.to_string()),
            ("pointgoal.goal_radius", p.goal_radius.to_string()),
            ("pointgoal.max_steps", p.max_steps.to_string()),
            ("pointgoal.goal_bonus", p.goal_bonus.to_string()),
            ("pointgoal.shaping_scale", p.shaping_scale.to_string()),
            ("pointgoal.aux_scale", p.aux_scale.to_string()),
            ("pointgoal.robot_radius", p.robot_radius.to_string()),
            ("pointgoal.max_lin_accel", p.max_lin_accel.to_string()),
            ("pointgoal.max_ang_accel", p.max_ang_accel.to_string()),
            ("pointgoal.max_ang_rate", p.max_ang_rate.to_string()),
            ("pointgoal.ray_range", p.ray_range.to_string()),
            ("pointgoal.num_obstacles", p.num_obstacles.to_string()),
            ("pointgoal.obstacle_radius_min", p.obstacle_radius_min.to_string()),
            ("pointgoal.obstacle_radius_max", p.obstacle_radius_max.to_string()),
            ("pointgoal.start_goal_min_dist", p.start_goal_min_dist.to_string()),
            ("pointgoal.start_goal_max_dist", p.start_goal_max_dist.to_string()),
            ("pointgoal.heading_noise", p.heading_noise.to_string()),
            (
                "pointgoal.tracking",
                match p.tracking {
                    TrackingReward::Penalize => "penalize".to_string(),
                    TrackingReward::Literal => "literal".to_string(),
                },
            ),
            (
                "pointgoal.scenario",
                self.scenario
                    .as_ref()
                    .map_or_else(|| "none".to_string(), |s| s.display().to_string()),
            ),
            ("swingup.gravity", s.gravity.to_string()),
            ("swingup.length", s.length.to_string()),
            ("swingup.mass", s.mass.to_string()),
            ("swingup.damping", s.damping.to_string()),
            ("swingup.max_torque", s.max_torque.to_string()),
            ("swingup.max_speed", s.max_speed.to_string()),
            ("swingup.dt", s.dt.to_string()),
            ("swingup.max_steps", s.max_steps.to_string()),
            ("swingup.init_noise", s.init_noise.to_string()),
            ("swingup.aux_mode", s.aux_mode.to_string()),
        ]
    }

    /// Flat `key = value` text accepted by [`TrainConfig::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_pairs() {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Parses flat config text and applies `overrides` after it.
    ///
    /// `run.env` is resolved first so the remaining keys apply on top of
    /// that environment's defaults. Blank lines and `#` comments are
    /// ignored; every other line must be `section.key = value`.
    pub fn from_text(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut pairs = parse_pairs(text)?;
        pairs.extend(overrides.iter().cloned());
        let env = match pairs.iter().rev().find(|(k, _)| k == "run.env") {
            Some((_, v)) => v.parse()?,
            None => EnvKind::PointGoal,
        };
        let mut cfg = Self::for_env(env);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

/// Splits config text into `(key, value)` pairs without interpreting them.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", n + 1)))?;
        let k = k.trim();
        if k.is_empty() || !k.contains('.') {
            return Err(Error::config(format!("line {}: key `{k}` must be `section.key`", n + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(format!("invalid value `{v}` for `{key}`")))
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::for_env(EnvKind::PointGoal)
    }
}
