use super::losses::{
    alpha_loss_and_grad, clipped_double_q, critic_loss_and_grad, sac_actor_loss_and_grad, sample_actions, td_targets,
};
use super::{apply_grads, check_loss, AgentConfig, UpdateStats, INIT_STREAM, UPDATE_STREAM};
use crate::numerics::{
    polyak_update, squashed_gaussian_sample, AdamConfig, Matrix, MlpParams, OptimState, OutputHead, Rng,
};
use crate::replay::Batch;
use crate::Result;

/// Maximum-entropy actor-critic with a tanh-squashed Gaussian policy and a
/// learned temperature.
#[derive(Debug, Clone)]
pub struct Sac {
    pub(crate) cfg: AgentConfig,
    pub(crate) act_dim: usize,
    pub(crate) actor: MlpParams,
    pub(crate) critic1: MlpParams,
    pub(crate) critic2: MlpParams,
    pub(crate) critic1_target: MlpParams,
    pub(crate) critic2_target: MlpParams,
    pub(crate) actor_opt: OptimState,
    pub(crate) critic1_opt: OptimState,
    pub(crate) critic2_opt: OptimState,
    /// Single-element so it can share the Adam implementation.
    pub(crate) log_alpha: Vec<f64>,
    pub(crate) alpha_opt: OptimState,
    pub(crate) updates: u64,
    rng: Rng,
}

impl Sac {
    pub fn new(obs_dim: usize, act_dim: usize, cfg: AgentConfig, seed: u64) -> Result<Self> {
        let mut init = Rng::stream(seed, INIT_STREAM);
        let actor = MlpParams::new(&cfg.layer_sizes(obs_dim, 2 * act_dim), OutputHead::Gaussian, &mut init)?;
        let critic_sizes = cfg.layer_sizes(obs_dim + act_dim, 1);
        let critic1 = MlpParams::new(&critic_sizes, OutputHead::Linear, &mut init)?;
        let critic2 = MlpParams::new(&critic_sizes, OutputHead::Linear, &mut init)?;
        let log_alpha = vec![cfg.alpha_init.ln()];
        Ok(Self {
            act_dim,
            actor_opt: OptimState::new(&actor, AdamConfig::with_lr(cfg.actor_lr)),
            critic1_opt: OptimState::new(&critic1, AdamConfig::with_lr(cfg.critic_lr)),
            critic2_opt: OptimState::new(&critic2, AdamConfig::with_lr(cfg.critic_lr)),
            alpha_opt: OptimState::new(&log_alpha, AdamConfig::with_lr(cfg.alpha_lr)),
            log_alpha,
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            updates: 0,
            rng: Rng::stream(seed, UPDATE_STREAM),
            cfg,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha[0].exp()
    }

    pub fn target_entropy(&self) -> f64 {
        self.cfg.target_entropy.unwrap_or(-(self.act_dim as f64))
    }

    pub fn act(&self, obs: &[f64], explore: bool, rng: &mut Rng) -> Result<Vec<f64>> {
        let out = self.actor.forward(obs)?;
        let d = self.act_dim;
        let rng = if explore { Some(rng) } else { None };
        Ok(squashed_gaussian_sample(&out[..d], &out[d..], rng).action)
    }

    fn noise(&mut self, rows: usize) -> Matrix {
        let data = (0..rows * self.act_dim).map(|_| self.rng.normal()).collect();
        Matrix::from_vec(rows, self.act_dim, data).expect("noise shape")
    }

    pub fn update(&mut self, batch: &Batch, w: f64) -> Result<UpdateStats> {
        let rewards = batch.composed_rewards(w)?;
        let n = batch.len();
        let alpha = self.alpha();
        let count = self.updates + 1;

        let next_noise = self.noise(n);
        let (next_actions, next_samples) = sample_actions(&self.actor, &batch.next_states, &next_noise)?;
        let next_inputs = batch.next_states.hcat(&next_actions)?;
        let q1 = self.critic1_target.forward_batch(&next_inputs)?;
        let q2 = self.critic2_target.forward_batch(&next_inputs)?;
        let next_values: Vec<f64> = clipped_double_q(q1.as_slice(), q2.as_slice())
            .into_iter()
            .zip(&next_samples)
            .map(|(q, s)| q - alpha * s.log_prob)
            .collect();
        let targets = td_targets(&rewards, &batch.terminated, &next_values, self.cfg.gamma);

        let inputs = batch.states.hcat(&batch.actions)?;
        let (l1, g1) = critic_loss_and_grad(&self.critic1, &inputs, &targets)?;
        let (l2, g2) = critic_loss_and_grad(&self.critic2, &inputs, &targets)?;
        check_loss("critic1", l1, count)?;
        check_loss("critic2", l2, count)?;
        apply_grads("critic1", &mut self.critic1, &g1, &mut self.critic1_opt)?;
        apply_grads("critic2", &mut self.critic2, &g2, &mut self.critic2_opt)?;

        let noise = self.noise(n);
        let actor = sac_actor_loss_and_grad(&self.actor, &self.critic1, &self.critic2, &batch.states, &noise, alpha)?;
        check_loss("actor", actor.loss, count)?;
        apply_grads("actor", &mut self.actor, &actor.grads, &mut self.actor_opt)?;

        let (alpha_loss, alpha_grad) = alpha_loss_and_grad(self.log_alpha[0], &actor.log_probs, self.target_entropy());
        check_loss("alpha", alpha_loss, count)?;
        apply_grads("alpha", &mut self.log_alpha, &vec![alpha_grad], &mut self.alpha_opt)?;

        polyak_update(&mut self.critic1_target, &self.critic1, self.cfg.tau)?;
        polyak_update(&mut self.critic2_target, &self.critic2, self.cfg.tau)?;
        self.updates = count;

        Ok(UpdateStats {
            critic1_loss: l1,
            critic2_loss: l2,
            actor_loss: Some(actor.loss),
            actor_loss_no_entropy: Some(actor.loss_no_entropy),
            alpha: Some(alpha),
        })
    }

    pub(crate) fn networks(&self) -> [&MlpParams; 5] {
        [
            &self.actor,
            &self.critic1,
            &self.critic2,
            &self.critic1_target,
            &self.critic2_target,
        ]
    }

    pub(crate) fn networks_mut(&mut self) -> [&mut MlpParams; 5] {
        [
            &mut self.actor,
            &mut self.critic1,
            &mut self.critic2,
            &mut self.critic1_target,
            &mut self.critic2_target,
        ]
    }

    pub(crate) fn optimizers(&self) -> [&OptimState; 4] {
        [&self.actor_opt, &self.critic1_opt, &self.critic2_opt, &self.alpha_opt]
    }

    pub(crate) fn optimizers_mut(&mut self) -> [&mut OptimState; 4] {
        [
            &mut self.actor_opt,
            &mut self.critic1_opt,
            &mut self.critic2_opt,
            &mut self.alpha_opt,
        ]
    }
}
