use serde::{Deserialize, Serialize};

use super::mlp::MlpParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3.0e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Anything that exposes its parameters as a sequence of flat slices in a
/// stable order.
pub trait ParamSlices {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }
}

impl ParamSlices for MlpParams {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.biases.as_slice()])
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.biases.as_mut_slice()])
            .collect()
    }
}

impl ParamSlices for Vec<f64> {
    fn param_slices(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

/// Adam moments for one parameter set, flattened in [`ParamSlices`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub config: AdamConfig,
}

impl OptimState {
    pub fn new(params: &impl ParamSlices, config: AdamConfig) -> Self {
        let n = params.param_count();
        Self {
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step_count: 0,
            config,
        }
    }
}

/// One bias-corrected Adam step. A non-finite gradient rejects the whole
/// update and leaves both parameters and state untouched.
pub fn adam_step<P: ParamSlices>(params: &mut P, grads: &P, opt: &mut OptimState) -> Result<()> {
    let n = params.param_count();
    if grads.param_count() != n || opt.first_moment.len() != n {
        return Err(Error::config(format!(
            "adam: {} parameters, {} gradients, {} moments",
            n,
            grads.param_count(),
            opt.first_moment.len()
        )));
    }
    let grad_slices = grads.param_slices();
    if grad_slices.iter().any(|s| s.iter().any(|g| !g.is_finite())) {
        return Err(Error::NonFinite("gradient".into()));
    }

    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = opt.config;
    opt.step_count += 1;
    let t = opt.step_count as i32;
    let bias1 = 1.0 - beta1.powi(t);
    let bias2 = 1.0 - beta2.powi(t);

    let mut idx = 0;
    for (p, g) in params.param_slices_mut().into_iter().zip(grad_slices) {
        for (theta, &grad) in p.iter_mut().zip(g) {
            let m = &mut opt.first_moment[idx];
            let v = &mut opt.second_moment[idx];
            *m = beta1 * *m + (1.0 - beta1) * grad;
            *v = beta2 * *v + (1.0 - beta2) * grad * grad;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *theta -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            idx += 1;
        }
    }
    Ok(())
}
