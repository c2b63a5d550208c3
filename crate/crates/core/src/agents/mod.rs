//! TD3 and SAC learners.
//!
//! Agents never see a pre-mixed reward: every update receives a replay batch
//! with separate reward channels and the curriculum weight `w` to compose
//! them with.

mod checkpoint;
pub mod losses;
mod sac;
mod td3;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use checkpoint::Policy;
pub use sac::Sac;
pub use td3::Td3;

use crate::numerics::{adam_step, MlpParams, OptimState, ParamSlices, Rng};
use crate::replay::Batch;
use crate::{Error, Result};

/// Rng stream used for network initialization.
pub const INIT_STREAM: u64 = 1;
/// Rng stream used for noise drawn inside updates.
pub const UPDATE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentKind {
    Td3,
    Sac,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Td3 => "td3",
            AgentKind::Sac => "sac",
        })
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "td3" => Ok(AgentKind::Td3),
            "sac" => Ok(AgentKind::Sac),
            other => Err(Error::config(format!("unknown agent `{other}`"))),
        }
    }
}

/// Gaussian exploration noise for TD3, annealed linearly from
/// `sigma_start` to `sigma_end` over `anneal_steps` environment steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationNoise {
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub anneal_steps: u64,
}

impl ExplorationNoise {
    pub fn constant(sigma: f64) -> Self {
        Self {
            sigma_start: sigma,
            sigma_end: sigma,
            anneal_steps: 0,
        }
    }

    pub fn sigma_at(&self, step: u64) -> f64 {
        if self.anneal_steps == 0 || step >= self.anneal_steps {
            return self.sigma_end;
        }
        let p = step as f64 / self.anneal_steps as f64;
        self.sigma_start + (self.sigma_end - self.sigma_start) * p
    }
}

impl Default for ExplorationNoise {
    fn default() -> Self {
        Self::constant(0.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    /// Polyak coefficient: `target ← tau·target + (1 − tau)·online`.
    pub tau: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub alpha_lr: f64,
    pub target_noise: f64,
    pub noise_clip: f64,
    pub policy_delay: u64,
    pub exploration: ExplorationNoise,
    pub alpha_init: f64,
    /// Defaults to `−dim(A)` when unset.
    pub target_entropy: Option<f64>,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            gamma: 0.99,
            tau: 0.995,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            alpha_lr: 3e-4,
            target_noise: 0.2,
            noise_clip: 0.5,
            policy_delay: 2,
            exploration: ExplorationNoise::default(),
            alpha_init: 1.0,
            target_entropy: None,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma must lie in [0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::config("tau must lie in (0, 1]"));
        }
        let rates = [self.actor_lr, self.critic_lr, self.alpha_lr, self.alpha_init];
        if rates.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::config("learning rates and alpha_init must be positive"));
        }
        if self.policy_delay == 0 {
            return Err(Error::config("policy_delay must be at least 1"));
        }
        let e = &self.exploration;
        if self.target_noise < 0.0 || self.noise_clip < 0.0 || e.sigma_start < 0.0 || e.sigma_end < 0.0 {
            return Err(Error::config("noise scales must be non-negative"));
        }
        Ok(())
    }

    pub(crate) fn layer_sizes(&self, input: usize, output: usize) -> Vec<usize> {
        let mut sizes = vec![input];
        sizes.extend(&self.hidden);
        sizes.push(output);
        sizes
    }
}

/// Losses reported by one gradient update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub critic1_loss: f64,
    pub critic2_loss: f64,
    /// Absent on TD3 updates that skip the delayed actor step.
    pub actor_loss: Option<f64>,
    /// Equal to `actor_loss` for TD3.
    pub actor_loss_no_entropy: Option<f64>,
    pub alpha: Option<f64>,
}

/// Either learner behind one type.
#[derive(Debug, Clone)]
pub enum Agent {
    Td3(Td3),
    Sac(Sac),
}

impl Agent {
    /// Builds a freshly initialized agent. Initialization and update noise
    /// come from the [`INIT_STREAM`] and [`UPDATE_STREAM`] streams of
    /// `seed`, so two agents built from the same arguments are identical.
    pub fn new(kind: AgentKind, obs_dim: usize, act_dim: usize, cfg: &AgentConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if obs_dim == 0 || act_dim == 0 {
            return Err(Error::config("observation and action sizes must be positive"));
        }
        Ok(match kind {
            AgentKind::Td3 => Agent::Td3(Td3::new(obs_dim, act_dim, cfg.clone(), seed)?),
            AgentKind::Sac => Agent::Sac(Sac::new(obs_dim, act_dim, cfg.clone(), seed)?),
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Td3(_) => AgentKind::Td3,
            Agent::Sac(_) => AgentKind::Sac,
        }
    }

    /// Action in `[-1, 1]^d`. With `explore` TD3 adds Gaussian noise at the
    /// scheduled sigma for `step` and SAC samples its policy; otherwise both
    /// act deterministically.
    pub fn act(&self, obs: &[f64], explore: bool, step: u64, rng: &mut Rng) -> Result<Vec<f64>> {
        match self {
            Agent::Td3(a) => a.act(obs, explore, step, rng),
            Agent::Sac(a) => a.act(obs, explore, rng),
        }
    }

    /// One gradient update on `batch` with rewards composed at weight `w`.
    pub fn update(&mut self, batch: &Batch, w: f64) -> Result<UpdateStats> {
        match self {
            Agent::Td3(a) => a.update(batch, w),
            Agent::Sac(a) => a.update(batch, w),
        }
    }

    pub fn actor(&self) -> &MlpParams {
        match self {
            Agent::Td3(a) => &a.actor,
            Agent::Sac(a) => &a.actor,
        }
    }

    /// Deterministic policy snapshot for evaluation.
    pub fn policy(&self) -> Policy {
        Policy::new(self.kind(), self.actor().clone())
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        checkpoint::save(self, w)
    }

    /// Restores weights, optimizer moments, temperature and counters saved
    /// by [`Agent::save`]. The update noise stream restarts from `seed`.
    pub fn load<R: Read>(r: R, cfg: &AgentConfig, seed: u64) -> Result<Self> {
        checkpoint::load(r, cfg, seed)
    }
}

pub(crate) fn check_loss(name: &str, value: f64, update: u64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Divergence(format!("{name} loss is {value} at update {update}")))
    }
}

pub(crate) fn apply_grads<P: ParamSlices>(name: &str, params: &mut P, grads: &P, opt: &mut OptimState) -> Result<()> {
    adam_step(params, grads, opt).map_err(|e| match e {
        Error::NonFinite(_) => Error::Divergence(format!("non-finite {name} gradient")),
        other => other,
    })
}
