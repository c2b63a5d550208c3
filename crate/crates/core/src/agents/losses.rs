//! Loss functions and their analytic parameter gradients.
//!
//! Each function takes networks and data explicitly and returns the
//! batch-mean loss together with gradients shaped like the network, so the
//! learners and the finite-difference tests share one code path.

use crate::numerics::{smooth_l1, smooth_l1_grad, squashed_from_noise, Matrix, MlpParams, SquashedSample};
use crate::{Error, Result};

/// Bootstrapped targets `r + γ·(1 − terminated)·next_value`.
pub fn td_targets(rewards: &[f64], terminated: &[bool], next_values: &[f64], gamma: f64) -> Vec<f64> {
    rewards
        .iter()
        .zip(terminated)
        .zip(next_values)
        .map(|((&r, &done), &v)| if done { r } else { r + gamma * v })
        .collect()
}

/// Elementwise `min(q1, q2)`.
pub fn clipped_double_q(q1: &[f64], q2: &[f64]) -> Vec<f64> {
    q1.iter().zip(q2).map(|(a, b)| a.min(*b)).collect()
}

/// Mean Smooth-L1 loss of a critic on `(state, action)` rows against fixed
/// targets, and its parameter gradient.
pub fn critic_loss_and_grad(critic: &MlpParams, inputs: &Matrix, targets: &[f64]) -> Result<(f64, MlpParams)> {
    if inputs.rows() != targets.len() || critic.output_dim() != 1 {
        return Err(Error::config("critic batch and target lengths differ"));
    }
    let cache = critic.forward_cached(inputs)?;
    let q = cache.output().as_slice();
    let n = q.len() as f64;
    let mut loss = 0.0;
    let mut upstream = Matrix::zeros(q.len(), 1);
    for (i, (&qi, &yi)) in q.iter().zip(targets).enumerate() {
        loss += smooth_l1(qi - yi);
        upstream.set(i, 0, smooth_l1_grad(qi - yi));
    }
    let back = critic.backward_cached(&cache, &upstream)?;
    Ok((loss / n, back.grads))
}

/// Q values and per-sample `∂Q/∂input`.
pub(crate) fn q_with_input_grad(critic: &MlpParams, inputs: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let cache = critic.forward_cached(inputs)?;
    let ones = Matrix::from_vec(inputs.rows(), 1, vec![1.0; inputs.rows()])?;
    let back = critic.backward_cached(&cache, &ones)?;
    Ok((cache.output().as_slice().to_vec(), back.input_grad))
}

/// TD3 actor loss `−mean Q1(s, π(s))` and its gradient with respect to the
/// actor parameters. The critic is held fixed.
pub fn td3_actor_loss_and_grad(actor: &MlpParams, critic: &MlpParams, states: &Matrix) -> Result<(f64, MlpParams)> {
    let cache = actor.forward_cached(states)?;
    let obs_dim = states.cols();
    let act_dim = actor.output_dim();
    let inputs = states.hcat(cache.output())?;
    let (q, dq) = q_with_input_grad(critic, &inputs)?;
    let loss = -q.iter().sum::<f64>() / q.len() as f64;
    let mut upstream = dq.columns(obs_dim, obs_dim + act_dim);
    upstream.as_mut_slice().iter_mut().for_each(|g| *g = -*g);
    let back = actor.backward_cached(&cache, &upstream)?;
    Ok((loss, back.grads))
}

/// Result of [`sac_actor_loss_and_grad`].
#[derive(Debug, Clone)]
pub struct SacActorGrad {
    /// `mean(α·log π(a|s) − min(Q1, Q2)(s, a))`.
    pub loss: f64,
    /// `−mean min(Q1, Q2)(s, a)`, the loss without the entropy term.
    pub loss_no_entropy: f64,
    pub grads: MlpParams,
    pub log_probs: Vec<f64>,
}

/// Draws reparameterized actions for every row of `states` from the given
/// standard-normal `noise` rows.
pub(crate) fn sample_actions(actor: &MlpParams, states: &Matrix, noise: &Matrix) -> Result<(Matrix, Vec<SquashedSample>)> {
    Ok(squash_rows(&actor.forward_batch(states)?, noise))
}

fn squash_rows(out: &Matrix, noise: &Matrix) -> (Matrix, Vec<SquashedSample>) {
    let d = out.cols() / 2;
    let mut actions = Matrix::zeros(out.rows(), d);
    let mut samples = Vec::with_capacity(out.rows());
    for i in 0..out.rows() {
        let row = out.row(i);
        let s = squashed_from_noise(&row[..d], &row[d..], noise.row(i).to_vec());
        actions.row_mut(i).copy_from_slice(&s.action);
        samples.push(s);
    }
    (actions, samples)
}

/// SAC actor loss through reparameterized samples with frozen `noise`
/// (one row per state). Gradients flow through the sampled action into
/// whichever critic is smaller for that sample; the critics are held fixed.
pub fn sac_actor_loss_and_grad(
    actor: &MlpParams,
    critic1: &MlpParams,
    critic2: &MlpParams,
    states: &Matrix,
    noise: &Matrix,
    alpha: f64,
) -> Result<SacActorGrad> {
    let n = states.rows();
    let obs_dim = states.cols();
    let d = actor.output_dim() / 2;
    if noise.rows() != n || noise.cols() != d {
        return Err(Error::config("sac noise shape does not match batch and action size"));
    }
    let cache = actor.forward_cached(states)?;
    let out = cache.output();
    let (actions, samples) = squash_rows(out, noise);
    let inputs = states.hcat(&actions)?;
    let (q1, g1) = q_with_input_grad(critic1, &inputs)?;
    let (q2, g2) = q_with_input_grad(critic2, &inputs)?;

    let mut loss = 0.0;
    let mut loss_no_entropy = 0.0;
    let mut upstream = Matrix::zeros(n, 2 * d);
    let mut log_probs = Vec::with_capacity(n);
    for i in 0..n {
        let s = &samples[i];
        let (q, dq) = if q1[i] <= q2[i] { (q1[i], &g1) } else { (q2[i], &g2) };
        loss += alpha * s.log_prob - q;
        loss_no_entropy -= q;
        log_probs.push(s.log_prob);
        let row = out.row(i);
        let mut up = vec![0.0; 2 * d];
        for j in 0..d {
            let dl_da = -dq.get(i, obs_dim + j);
            let log_std = row[d + j];
            up[j] = alpha * s.dlogp_dmean(j) + dl_da * s.daction_dmean(j);
            up[d + j] = alpha * s.dlogp_dlogstd(j, log_std) + dl_da * s.daction_dlogstd(j, log_std);
        }
        upstream.row_mut(i).copy_from_slice(&up);
    }
    let back = actor.backward_cached(&cache, &upstream)?;
    Ok(SacActorGrad {
        loss: loss / n as f64,
        loss_no_entropy: loss_no_entropy / n as f64,
        grads: back.grads,
        log_probs,
    })
}

/// Temperature loss `mean[−α·(log π + H̃)]` with `α = exp(log_alpha)`, and
/// its derivative with respect to `log_alpha`.
pub fn alpha_loss_and_grad(log_alpha: f64, log_probs: &[f64], target_entropy: f64) -> (f64, f64) {
    let alpha = log_alpha.exp();
    let mean = log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / log_probs.len() as f64;
    let loss = -alpha * mean;
    (loss, loss)
}
