//! Dense reward terms.
//!
//! The navigation terms are each normalised to `[-1, 1]`; the behavioural
//! terms are non-positive penalties.

/// `1 − Σ|a_i|` over a two-dimensional action in `[-1, 1]²`.
pub fn reward_action(action: &[f64]) -> f64 {
    1.0 - action.iter().map(|a| a.abs()).sum::<f64>()
}

/// Asymmetric quadratic: `κ·x²` for `x > 0`, `(1 − κ)·x²` otherwise.
pub fn piecewise_quadratic(x: f64, kappa: f64) -> f64 {
    if x > 0.0 {
        kappa * x * x
    } else {
        (1.0 - kappa) * x * x
    }
}

/// Velocity tracking reward, 1 at `v_ref` and falling quadratically (more
/// steeply above `v_ref` when `κ > 0.5`) to −1 at the far end of `[0, v_max]`.
pub fn reward_velocity(v: f64, v_ref: f64, v_max: f64, kappa: f64) -> f64 {
    let worst = piecewise_quadratic(-v_ref, kappa).max(piecewise_quadratic(v_max - v_ref, kappa));
    1.0 - piecewise_quadratic(v - v_ref, kappa) * 2.0 / worst
}

/// Path-tracking reward: 1 on the path, −1 at or beyond `d_max`, linear in
/// between.
pub fn reward_tracking(d_track: f64, d_max: f64) -> f64 {
    1.0 - 2.0 * (d_track.abs() / d_max).min(1.0)
}

/// `clip(|d| / d_max, −1, 1)`, which grows with the deviation. Kept only for
/// compatibility runs; see [`reward_tracking`] for the penalising form.
pub fn reward_tracking_literal(d_track: f64, d_max: f64) -> f64 {
    (d_track.abs() / d_max).clamp(-1.0, 1.0)
}

/// Progress along the reference path normalised by the largest possible
/// single-step advance, clipped to `[-1, 1]`.
pub fn reward_progress(p_prev: f64, p_next: f64, v_max: f64, dt: f64) -> f64 {
    ((p_next - p_prev) / (v_max * dt)).clamp(-1.0, 1.0)
}

/// Upright score in `[0, 1]` for a pole at angle `theta` from upright.
pub fn upright_reward(theta: f64) -> f64 {
    0.5 * (1.0 + theta.cos())
}

/// `−‖a_t − a_{t−1}‖₂`.
pub fn reward_smooth(action: &[f64], prev_action: &[f64]) -> f64 {
    -l2_diff(action, prev_action)
}

/// `−‖q̇_t − q̇_{t−1}‖₂`.
pub fn reward_jerk(velocity: &[f64], prev_velocity: &[f64]) -> f64 {
    -l2_diff(velocity, prev_velocity)
}

/// `−‖a_t‖₂`.
pub fn reward_effort(action: &[f64]) -> f64 {
    -action.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `−Σ|a_i|`.
pub fn reward_action_magnitude(action: &[f64]) -> f64 {
    -action.iter().map(|a| a.abs()).sum::<f64>()
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
