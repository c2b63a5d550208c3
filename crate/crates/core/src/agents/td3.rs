use super::losses::{clipped_double_q, critic_loss_and_grad, td3_actor_loss_and_grad, td_targets};
use super::{apply_grads, check_loss, AgentConfig, UpdateStats, INIT_STREAM, UPDATE_STREAM};
use crate::numerics::{polyak_update, AdamConfig, MlpParams, OptimState, OutputHead, Rng};
use crate::replay::Batch;
use crate::Result;

/// Twin-critic deterministic actor-critic with delayed policy updates and
/// target policy smoothing.
#[derive(Debug, Clone)]
pub struct Td3 {
    pub(crate) cfg: AgentConfig,
    pub(crate) actor: MlpParams,
    pub(crate) actor_target: MlpParams,
    pub(crate) critic1: MlpParams,
    pub(crate) critic2: MlpParams,
    pub(crate) critic1_target: MlpParams,
    pub(crate) critic2_target: MlpParams,
    pub(crate) actor_opt: OptimState,
    pub(crate) critic1_opt: OptimState,
    pub(crate) critic2_opt: OptimState,
    pub(crate) critic_updates: u64,
    pub(crate) actor_updates: u64,
    rng: Rng,
}

impl Td3 {
    pub fn new(obs_dim: usize, act_dim: usize, cfg: AgentConfig, seed: u64) -> Result<Self> {
        let mut init = Rng::stream(seed, INIT_STREAM);
        let actor = MlpParams::new(&cfg.layer_sizes(obs_dim, act_dim), OutputHead::TanhBounded, &mut init)?;
        let critic_sizes = cfg.layer_sizes(obs_dim + act_dim, 1);
        let critic1 = MlpParams::new(&critic_sizes, OutputHead::Linear, &mut init)?;
        let critic2 = MlpParams::new(&critic_sizes, OutputHead::Linear, &mut init)?;
        Ok(Self {
            actor_opt: OptimState::new(&actor, AdamConfig::with_lr(cfg.actor_lr)),
            critic1_opt: OptimState::new(&critic1, AdamConfig::with_lr(cfg.critic_lr)),
            critic2_opt: OptimState::new(&critic2, AdamConfig::with_lr(cfg.critic_lr)),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            critic_updates: 0,
            actor_updates: 0,
            rng: Rng::stream(seed, UPDATE_STREAM),
            cfg,
        })
    }

    pub fn act(&self, obs: &[f64], explore: bool, step: u64, rng: &mut Rng) -> Result<Vec<f64>> {
        let mut a = self.actor.forward(obs)?;
        if explore {
            let sigma = self.cfg.exploration.sigma_at(step);
            for v in &mut a {
                *v = (*v + sigma * rng.normal()).clamp(-1.0, 1.0);
            }
        }
        Ok(a)
    }

    pub fn critic_updates(&self) -> u64 {
        self.critic_updates
    }

    pub fn actor_updates(&self) -> u64 {
        self.actor_updates
    }

    pub fn update(&mut self, batch: &Batch, w: f64) -> Result<UpdateStats> {
        let rewards = batch.composed_rewards(w)?;
        let c = &self.cfg;

        let mut next_actions = self.actor_target.forward_batch(&batch.next_states)?;
        for v in next_actions.as_mut_slice() {
            let eps = (c.target_noise * self.rng.normal()).clamp(-c.noise_clip, c.noise_clip);
            *v = (*v + eps).clamp(-1.0, 1.0);
        }
        let next_inputs = batch.next_states.hcat(&next_actions)?;
        let q1 = self.critic1_target.forward_batch(&next_inputs)?;
        let q2 = self.critic2_target.forward_batch(&next_inputs)?;
        let next_values = clipped_double_q(q1.as_slice(), q2.as_slice());
        let targets = td_targets(&rewards, &batch.terminated, &next_values, c.gamma);

        let inputs = batch.states.hcat(&batch.actions)?;
        let count = self.critic_updates + 1;
        let (l1, g1) = critic_loss_and_grad(&self.critic1, &inputs, &targets)?;
        let (l2, g2) = critic_loss_and_grad(&self.critic2, &inputs, &targets)?;
        check_loss("critic1", l1, count)?;
        check_loss("critic2", l2, count)?;
        apply_grads("critic1", &mut self.critic1, &g1, &mut self.critic1_opt)?;
        apply_grads("critic2", &mut self.critic2, &g2, &mut self.critic2_opt)?;
        self.critic_updates = count;

        let mut actor_loss = None;
        if self.critic_updates % self.cfg.policy_delay == 0 {
            let (la, ga) = td3_actor_loss_and_grad(&self.actor, &self.critic1, &batch.states)?;
            check_loss("actor", la, count)?;
            apply_grads("actor", &mut self.actor, &ga, &mut self.actor_opt)?;
            self.actor_updates += 1;
            let tau = self.cfg.tau;
            polyak_update(&mut self.actor_target, &self.actor, tau)?;
            polyak_update(&mut self.critic1_target, &self.critic1, tau)?;
            polyak_update(&mut self.critic2_target, &self.critic2, tau)?;
            actor_loss = Some(la);
        }
        Ok(UpdateStats {
            critic1_loss: l1,
            critic2_loss: l2,
            actor_loss,
            actor_loss_no_entropy: actor_loss,
            alpha: None,
        })
    }

    /// Networks in checkpoint order.
    pub(crate) fn networks(&self) -> [&MlpParams; 6] {
        [
            &self.actor,
            &self.actor_target,
            &self.critic1,
            &self.critic2,
            &self.critic1_target,
            &self.critic2_target,
        ]
    }

    pub(crate) fn networks_mut(&mut self) -> [&mut MlpParams; 6] {
        [
            &mut self.actor,
            &mut self.actor_target,
            &mut self.critic1,
            &mut self.critic2,
            &mut self.critic1_target,
            &mut self.critic2_target,
        ]
    }

    pub(crate) fn optimizers_mut(&mut self) -> [&mut OptimState; 3] {
        [&mut self.actor_opt, &mut self.critic1_opt, &mut self.critic2_opt]
    }

    pub(crate) fn optimizers(&self) -> [&OptimState; 3] {
        [&self.actor_opt, &self.critic1_opt, &self.critic2_opt]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Matrix;
    use crate::replay::Transition;

    #[test]
    fn gamma_zero_critic_regresses_to_reward() {
        let cfg = AgentConfig {
            gamma: 0.0,
            critic_lr: 1e-2,
            ..AgentConfig::default()
        };
        let mut agent = Td3::new(2, 1, cfg, 0).unwrap();
        let t = Transition {
            state: vec![0.3, -0.2],
            action: vec![0.5],
            r_fixed: 0.0,
            r_base: 0.8,
            r_aux: -0.4,
            next_state: vec![1.0, 1.0],
            terminated: false,
            truncated: false,
        };
        let batch = Batch::from_transitions(&[t]).unwrap();
        for _ in 0..400 {
            agent.update(&batch, 0.5).unwrap();
        }
        let q = agent.critic1.forward(&[0.3, -0.2, 0.5]).unwrap()[0];
        assert!((q - 0.2).abs() < 1e-3, "q = {q}");
    }

    #[test]
    fn counters_track_delay() {
        let mut agent = Td3::new(2, 1, AgentConfig::default(), 0).unwrap();
        let states = Matrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        let batch = Batch {
            states: states.clone(),
            actions: Matrix::from_rows(&[vec![0.1]]).unwrap(),
            next_states: states,
            r_fixed: vec![0.0],
            r_base: vec![1.0],
            r_aux: vec![0.0],
            terminated: vec![false],
        };
        for _ in 0..9 {
            agent.update(&batch, 0.0).unwrap();
        }
        assert_eq!(agent.critic_updates(), 9);
        assert_eq!(agent.actor_updates(), 4);
    }
}
