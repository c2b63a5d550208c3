use super::rng::Rng;
use super::softplus;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// A reparameterized draw `a = tanh(mean + exp(log_std)·ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample {
    pub action: Vec<f64>,
    pub log_prob: f64,
    /// Pre-squash value `mean + exp(log_std)·ξ`.
    pub pre_tanh: Vec<f64>,
    pub noise: Vec<f64>,
}

/// `ln(1 − tanh²(u))` in the form `2·(ln 2 − u − softplus(−2u))`.
pub fn tanh_log_det_jacobian(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Draws from the tanh-squashed diagonal Gaussian. With `rng = None` the
/// noise is zero and the action is `tanh(mean)`.
pub fn squashed_gaussian_sample(mean: &[f64], log_std: &[f64], rng: Option<&mut Rng>) -> SquashedSample {
    let noise = match rng {
        Some(r) => (0..mean.len()).map(|_| r.normal()).collect(),
        None => vec![0.0; mean.len()],
    };
    squashed_from_noise(mean, log_std, noise)
}

/// Same as [`squashed_gaussian_sample`] but with caller-supplied noise.
pub fn squashed_from_noise(mean: &[f64], log_std: &[f64], noise: Vec<f64>) -> SquashedSample {
    assert_eq!(mean.len(), log_std.len());
    assert_eq!(mean.len(), noise.len());
    let mut action = Vec::with_capacity(mean.len());
    let mut pre_tanh = Vec::with_capacity(mean.len());
    let mut log_prob = 0.0;
    for ((&mu, &ls), &xi) in mean.iter().zip(log_std).zip(&noise) {
        let ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        let u = mu + ls.exp() * xi;
        log_prob += -0.5 * xi * xi - ls - HALF_LN_2PI - tanh_log_det_jacobian(u);
        pre_tanh.push(u);
        action.push(u.tanh());
    }
    SquashedSample {
        action,
        log_prob,
        pre_tanh,
        noise,
    }
}

impl SquashedSample {
    /// `∂ log_prob / ∂ mean_j` with the noise held fixed.
    pub fn dlogp_dmean(&self, j: usize) -> f64 {
        2.0 * self.action[j]
    }

    /// `∂ log_prob / ∂ log_std_j` with the noise held fixed.
    pub fn dlogp_dlogstd(&self, j: usize, log_std: f64) -> f64 {
        -1.0 + 2.0 * self.action[j] * log_std.exp() * self.noise[j]
    }

    /// `∂ action_j / ∂ mean_j`.
    pub fn daction_dmean(&self, j: usize) -> f64 {
        1.0 - self.action[j] * self.action[j]
    }

    /// `∂ action_j / ∂ log_std_j`.
    pub fn daction_dlogstd(&self, j: usize, log_std: f64) -> f64 {
        self.daction_dmean(j) * log_std.exp() * self.noise[j]
    }
}
