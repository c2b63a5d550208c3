use std::collections::BTreeMap;

use serde::Serialize;

use crate::agents::Policy;
use crate::envs::{Environment, Outcome};
use crate::numerics::Rng;
use crate::replay::{check_weight, compose};
use crate::{Error, Result};

/// Aggregate of deterministic evaluation rollouts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub episodes: usize,
    /// Fraction of episodes that ended at the goal.
    pub success_rate: f64,
    /// Per-step mean base reward over all evaluation steps.
    pub mean_r_base: f64,
    /// Per-step mean reward composed at `w_target`.
    pub mean_r_w_target: f64,
    /// Mean discounted return `G_0` of the composed reward.
    pub mean_return: f64,
    pub mean_length: f64,
    pub min_length: usize,
    pub max_length: usize,
    pub outcomes: BTreeMap<Outcome, usize>,
}

/// Anything that maps observations to actions without exploration.
pub trait Actor {
    fn action(&self, obs: &[f64]) -> Result<Vec<f64>>;
}

impl Actor for Policy {
    fn action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.act(obs)
    }
}

impl<F: Fn(&[f64]) -> Vec<f64>> Actor for F {
    fn action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        Ok(self(obs))
    }
}

/// Runs `episodes` full episodes of `actor` on `env`. Resets draw from
/// `rng`; nothing is written anywhere else.
pub fn evaluate<E: Environment, A: Actor>(
    actor: &A,
    env: &mut E,
    episodes: usize,
    rng: &mut Rng,
    w_target: f64,
    gamma: f64,
) -> Result<EvalReport> {
    check_weight(w_target)?;
    if episodes == 0 {
        return Err(Error::config("evaluation needs at least one episode"));
    }
    let mut outcomes = BTreeMap::new();
    let mut base_sum = 0.0;
    let mut composed_sum = 0.0;
    let mut return_sum = 0.0;
    let mut steps_total = 0usize;
    let mut lengths = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(rng)?;
        let mut discount = 1.0;
        let mut ret = 0.0;
        let mut len = 0usize;
        loop {
            let action = actor.action(&obs)?;
            let step = env.step(&action)?;
            let r = step.reward;
            let r_w = compose(r.r_fixed, r.r_base, r.r_aux, w_target);
            base_sum += r.r_base;
            composed_sum += r_w;
            ret += discount * r_w;
            discount *= gamma;
            len += 1;
            if step.done() {
                *outcomes.entry(step.info.outcome).or_insert(0) += 1;
                break;
            }
            obs = step.next_observation;
        }
        steps_total += len;
        return_sum += ret;
        lengths.push(len);
    }
    let n = episodes as f64;
    Ok(EvalReport {
        episodes,
        success_rate: outcomes.get(&Outcome::Goal).copied().unwrap_or(0) as f64 / n,
        mean_r_base: base_sum / steps_total as f64,
        mean_r_w_target: composed_sum / steps_total as f64,
        mean_return: return_sum / n,
        mean_length: steps_total as f64 / n,
        min_length: lengths.iter().copied().min().unwrap_or(0),
        max_length: lengths.iter().copied().max().unwrap_or(0),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{PointGoal, PointGoalConfig, Scenario, SwingUp, SwingUpConfig};

    #[test]
    fn scripted_goal_reacher_always_succeeds() {
        let scenario = Scenario {
            start: Some([0.0, 0.0, 0.0]),
            goal: Some([3.0, 0.0]),
            ..Scenario::default()
        };
        let cfg = PointGoalConfig {
            num_obstacles: 0,
            ..PointGoalConfig::default()
        };
        let mut env = PointGoal::with_scenario(cfg, scenario).unwrap();
        let straight = |_: &[f64]| vec![1.0, 0.0];
        let r = evaluate(&straight, &mut env, 5, &mut Rng::new(0), 0.75, 0.99).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.outcomes[&Outcome::Goal], 5);
    }

    #[test]
    fn zero_weight_composes_fixed_plus_base() {
        let mut env = SwingUp::new(SwingUpConfig {
            max_steps: 50,
            ..SwingUpConfig::default()
        })
        .unwrap();
        let push = |_: &[f64]| vec![0.7];
        let r = evaluate(&push, &mut env, 2, &mut Rng::new(3), 0.0, 0.99).unwrap();
        assert_eq!(r.mean_r_w_target, r.mean_r_base);
        assert_eq!(r.success_rate, 0.0);
        assert_eq!((r.min_length, r.max_length), (50, 50));
    }
}
