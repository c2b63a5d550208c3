//! Reward-term oracles for the environments.

use rcurriculum::envs::rewards::{
    reward_action, reward_progress, reward_tracking, reward_velocity, upright_reward,
};
use rcurriculum::envs::{Environment, Outcome, PointGoal, PointGoalConfig};
use rcurriculum::numerics::Rng;

pub const KAPPA: f64 = 0.942;
pub const V_REF: f64 = 1.2;
pub const V_MAX: f64 = 1.5;

/// The velocity reward evaluated straight from its defining formula.
pub fn velocity_formula(v: f64) -> f64 {
    let l2 = |x: f64| if x > 0.0 { KAPPA * x * x } else { (1.0 - KAPPA) * x * x };
    1.0 - l2(v - V_REF) * 2.0 / l2(-V_REF).max(l2(V_MAX - V_REF))
}

pub fn check_velocity_points() -> Result<(), String> {
    let at_ref = reward_velocity(1.2, V_REF, V_MAX, KAPPA);
    if at_ref != 1.0 {
        return Err(format!("reward_velocity(1.2) = {at_ref}"));
    }
    for v in [0.0, 1.5] {
        let (got, want) = (reward_velocity(v, V_REF, V_MAX, KAPPA), velocity_formula(v));
        if (got - want).abs() > 1e-9 {
            return Err(format!("reward_velocity({v}) = {got}, formula gives {want}"));
        }
    }
    Ok(())
}

fn in_unit(name: &str, v: f64) -> Result<(), String> {
    if (-1.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(format!("{name} = {v} outside [-1, 1]"))
    }
}

/// Dense PointGoal terms over `n` random states, half sampled directly over
/// each term's domain and half visited by random-action rollouts.
pub fn check_dense_ranges(n: usize, seed: u64) -> Result<(), String> {
    let mut rng = Rng::new(seed);
    let cfg = PointGoalConfig::default();
    for _ in 0..n / 2 {
        let v = rng.uniform_range(0.0, cfg.v_max);
        in_unit("r_v", reward_velocity(v, cfg.v_ref, cfg.v_max, cfg.kappa))?;
        let a = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
        in_unit("r_a", reward_action(&a))?;
        in_unit("r_x", reward_tracking(rng.uniform_range(0.0, 20.0), cfg.d_track_max))?;
        let p = rng.uniform_range(0.0, 10.0);
        let step = rng.uniform_range(-3.0, 3.0) * cfg.v_max * cfg.dt;
        in_unit("r_p", reward_progress(p, p + step, cfg.v_max, cfg.dt))?;
        in_unit("upright", 2.0 * upright_reward(rng.uniform_range(-10.0, 10.0)) - 1.0)?;
    }
    let mut env = PointGoal::new(cfg.clone()).map_err(|e| e.to_string())?;
    let mut env_rng = Rng::new(seed ^ 0x5eed);
    env.reset(&mut env_rng).map_err(|e| e.to_string())?;
    for _ in 0..n / 2 {
        let a = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
        let s = env.step(&a).map_err(|e| e.to_string())?;
        for name in ["r_p", "r_v", "r_a", "r_x"] {
            in_unit(name, s.info.raw_terms[name])?;
        }
        if s.done() {
            env.reset(&mut env_rng).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

/// Summary of the telescoping check.
#[derive(Debug, Default)]
pub struct TelescopeReport {
    pub trajectories: usize,
    pub max_error: f64,
    pub clipped_steps: usize,
}

/// Over random-action episodes, `Σ r_p · v_max · dt` equals the net path
/// progress.
pub fn check_telescoping(trajectories: usize, seed: u64) -> TelescopeReport {
    let cfg = PointGoalConfig::default();
    let unit = cfg.v_max * cfg.dt;
    let mut env = PointGoal::new(cfg).unwrap();
    let mut rng = Rng::new(seed);
    let mut rep = TelescopeReport::default();
    for _ in 0..trajectories {
        env.reset(&mut rng).unwrap();
        let p0 = env.path_progress();
        // Mostly forward so trajectories cover real progress.
        let bias = rng.uniform_range(0.0, 1.0);
        let mut sum = 0.0;
        loop {
            let a = [(bias + rng.normal()).clamp(-1.0, 1.0), rng.uniform_range(-0.5, 0.5)];
            let s = env.step(&a).unwrap();
            let r_p = s.info.raw_terms["r_p"];
            if r_p.abs() >= 1.0 {
                rep.clipped_steps += 1;
            }
            sum += r_p * unit;
            if s.done() {
                break;
            }
        }
        rep.max_error = rep.max_error.max((sum - (env.path_progress() - p0)).abs());
        rep.trajectories += 1;
    }
    rep
}

/// Fraction of random-action episodes that reach the goal.
pub fn random_policy_success(episodes: usize, seed: u64) -> f64 {
    let mut env = PointGoal::new(PointGoalConfig::default()).unwrap();
    let mut rng = Rng::new(seed);
    let mut goals = 0;
    for _ in 0..episodes {
        env.reset(&mut rng).unwrap();
        loop {
            let a = [rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
            let s = env.step(&a).unwrap();
            if s.done() {
                goals += usize::from(s.info.outcome == Outcome::Goal);
                break;
            }
        }
    }
    goals as f64 / episodes as f64
}
