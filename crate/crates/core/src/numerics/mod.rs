//! Deterministic small-scale neural-network math.
//!
//! Everything here operates on `f64` and explicit state so results are
//! reproducible bit-for-bit for a given seed. Gradients are analytic and are
//! checked against central finite differences in the tests.

mod adam;
mod gaussian;
mod matrix;
mod mlp;
mod rng;

pub use adam::{adam_step, AdamConfig, OptimState, ParamSlices};
pub use gaussian::{
    squashed_from_noise, squashed_gaussian_sample, tanh_log_det_jacobian, SquashedSample, LOG_STD_MAX,
    LOG_STD_MIN,
};
pub use matrix::Matrix;
pub use mlp::{polyak_update, Activation, Dense, ForwardCache, MlpBackward, MlpParams, OutputHead};
pub use rng::Rng;

/// Smooth-L1 (Huber with unit threshold) loss of a residual.
pub fn smooth_l1(diff: f64) -> f64 {
    let a = diff.abs();
    if a < 1.0 {
        0.5 * diff * diff
    } else {
        a - 0.5
    }
}

/// Derivative of [`smooth_l1`] with respect to the residual.
pub fn smooth_l1_grad(diff: f64) -> f64 {
    if diff.abs() < 1.0 {
        diff
    } else {
        diff.signum()
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_l1_is_continuous_at_threshold() {
        assert!((smooth_l1(1.0 - 1e-12) - smooth_l1(1.0 + 1e-12)).abs() < 1e-10);
        assert_eq!(smooth_l1(0.0), 0.0);
        assert_eq!(smooth_l1(-3.0), 2.5);
        assert_eq!(smooth_l1_grad(-3.0), -1.0);
        assert_eq!(smooth_l1_grad(0.25), 0.25);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for &x in &[-20.0, -1.0, 0.0, 0.5, 3.0, 30.0] {
            let naive = (1.0f64 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-12, "x={x}");
        }
        assert!(softplus(800.0).is_finite());
    }
}
