use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::rewards::{
    reward_action, reward_progress, reward_tracking, reward_tracking_literal, reward_velocity,
};
use super::scenario::{Obstacle, Scenario};
use super::{check_action, EnvStep, Environment, Outcome, RewardParts, StepInfo};
use crate::numerics::Rng;
use crate::{Error, Result};

pub const RAY_COUNT: usize = 8;
/// position 2, velocity 2, goal vector 2, path progress 1, tracking
/// distance 1, ray distances 8.
pub const POINTGOAL_OBS_DIM: usize = 8 + RAY_COUNT;

const PLACEMENT_ATTEMPTS: usize = 100;

/// How the path-tracking term maps deviation to reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackingReward {
    /// `1 − 2·min(d / d_max, 1)`.
    Penalize,
    /// `clip(d / d_max, −1, 1)`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointGoalConfig {
    pub half_size: f64,
    pub dt: f64,
    pub v_max: f64,
    pub v_ref: f64,
    pub kappa: f64,
    pub d_track_max: f64,
    pub goal_radius: f64,
    pub max_steps: u32,
    pub goal_bonus: f64,
    pub shaping_scale: f64,
    pub aux_scale: f64,
    pub robot_radius: f64,
    /// Translational acceleration at full action, units/s².
    pub max_lin_accel: f64,
    /// Angular acceleration at full action, rad/s².
    pub max_ang_accel: f64,
    pub max_ang_rate: f64,
    pub ray_range: f64,
    pub num_obstacles: usize,
    pub obstacle_radius_min: f64,
    pub obstacle_radius_max: f64,
    pub start_goal_min_dist: f64,
    pub start_goal_max_dist: f64,
    /// Largest initial deviation of the heading from the goal direction.
    pub heading_noise: f64,
    pub tracking: TrackingReward,
}

impl Default for PointGoalConfig {
    fn default() -> Self {
        Self {
            half_size: 6.0,
            dt: 0.1,
            v_max: 1.5,
            v_ref: 1.2,
            kappa: 0.942,
            d_track_max: 5.0,
            goal_radius: 0.3,
            max_steps: 300,
            goal_bonus: 10.0,
            shaping_scale: 0.02,
            aux_scale: 0.5,
            robot_radius: 0.2,
            max_lin_accel: 1.5,
            max_ang_accel: 4.0,
            max_ang_rate: 2.0,
            ray_range: 4.0,
            num_obstacles: 2,
            obstacle_radius_min: 0.3,
            obstacle_radius_max: 0.8,
            start_goal_min_dist: 3.0,
            start_goal_max_dist: 8.0,
            heading_noise: PI / 3.0,
            tracking: TrackingReward::Penalize,
        }
    }
}

impl PointGoalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.v_ref && self.v_ref < self.v_max) {
            return Err(Error::config("pointgoal needs 0 < v_ref < v_max"));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(Error::config("pointgoal kappa must lie in [0, 1]"));
        }
        let positive = [
            self.half_size,
            self.dt,
            self.d_track_max,
            self.goal_radius,
            self.robot_radius,
            self.ray_range,
            self.obstacle_radius_min,
            self.obstacle_radius_max,
            self.max_lin_accel,
            self.max_ang_accel,
            self.max_ang_rate,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::config("pointgoal lengths, radii and rates must be positive"));
        }
        if self.obstacle_radius_min > self.obstacle_radius_max {
            return Err(Error::config("obstacle radius range is empty"));
        }
        if self.start_goal_min_dist > self.start_goal_max_dist {
            return Err(Error::config("start-goal distance range is empty"));
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be positive"));
        }
        Ok(())
    }
}

/// Unicycle robot driving to a goal along a straight reference path.
///
/// Actions are translational and angular accelerations in `[-1, 1]`.
/// Reward channels: `r_fixed` is the goal bonus, `r_base` the scaled path
/// progress, `r_aux` the scaled sum of velocity, action and tracking terms.
#[derive(Debug, Clone)]
pub struct PointGoal {
    cfg: PointGoalConfig,
    scenario: Option<Scenario>,
    pos: [f64; 2],
    heading: f64,
    speed: f64,
    ang_rate: f64,
    start: [f64; 2],
    goal: [f64; 2],
    obstacles: Vec<Obstacle>,
    path_progress: f64,
    steps: u32,
    done: bool,
}

impl PointGoal {
    pub fn new(cfg: PointGoalConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            scenario: None,
            pos: [0.0; 2],
            heading: 0.0,
            speed: 0.0,
            ang_rate: 0.0,
            start: [0.0; 2],
            goal: [1.0, 0.0],
            obstacles: Vec::new(),
            path_progress: 0.0,
            steps: 0,
            done: true,
        })
    }

    /// Fixes the world layout to `scenario`; unspecified parts stay random.
    pub fn with_scenario(mut cfg: PointGoalConfig, scenario: Scenario) -> Result<Self> {
        if let Some(h) = scenario.half_size {
            cfg.half_size = h;
        }
        let mut env = Self::new(cfg)?;
        env.scenario = Some(scenario);
        Ok(env)
    }

    pub fn config(&self) -> &PointGoalConfig {
        &self.cfg
    }

    pub fn position(&self) -> [f64; 2] {
        self.pos
    }

    pub fn heading(&self) -> f64 {
        self.heading
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn goal(&self) -> [f64; 2] {
        self.goal
    }

    pub fn start(&self) -> [f64; 2] {
        self.start
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    /// Arc-length of the current position projected onto the path.
    pub fn path_progress(&self) -> f64 {
        self.path_progress
    }

    pub fn path_length(&self) -> f64 {
        dist(self.start, self.goal)
    }

    /// Distance from the current position to the reference segment.
    pub fn tracking_distance(&self) -> f64 {
        self.project(self.pos).1
    }

    /// Projection of `p` onto the start→goal segment as
    /// `(arc-length, distance)`.
    fn project(&self, p: [f64; 2]) -> (f64, f64) {
        let len = self.path_length();
        let dir = [(self.goal[0] - self.start[0]) / len, (self.goal[1] - self.start[1]) / len];
        let rel = [p[0] - self.start[0], p[1] - self.start[1]];
        let s = (rel[0] * dir[0] + rel[1] * dir[1]).clamp(0.0, len);
        let closest = [self.start[0] + s * dir[0], self.start[1] + s * dir[1]];
        (s, dist(p, closest))
    }

    fn collides(&self, p: [f64; 2]) -> bool {
        let lim = self.cfg.half_size - self.cfg.robot_radius;
        p[0].abs() > lim
            || p[1].abs() > lim
            || self
                .obstacles
                .iter()
                .any(|o| dist(p, o.center) < o.radius + self.cfg.robot_radius)
    }

    fn observation(&self) -> Vec<f64> {
        let c = &self.cfg;
        let (s, d) = self.project(self.pos);
        let (sin_h, cos_h) = self.heading.sin_cos();
        let gx = self.goal[0] - self.pos[0];
        let gy = self.goal[1] - self.pos[1];
        let goal_local = [cos_h * gx + sin_h * gy, -sin_h * gx + cos_h * gy];
        let mut obs = Vec::with_capacity(POINTGOAL_OBS_DIM);
        obs.extend([
            self.pos[0] / c.half_size,
            self.pos[1] / c.half_size,
            self.speed / c.v_max,
            self.ang_rate / c.max_ang_rate,
            goal_local[0] / (2.0 * c.half_size),
            goal_local[1] / (2.0 * c.half_size),
            s / self.path_length(),
            (d / c.d_track_max).min(1.0),
        ]);
        for k in 0..RAY_COUNT {
            let angle = self.heading + 2.0 * PI * k as f64 / RAY_COUNT as f64;
            obs.push(self.ray_distance(angle) / c.ray_range);
        }
        obs
    }

    /// Free distance along a ray from the robot centre, capped at the range.
    fn ray_distance(&self, angle: f64) -> f64 {
        let (dy, dx) = angle.sin_cos();
        let mut best = self.cfg.ray_range;
        let h = self.cfg.half_size;
        for (d, p) in [(dx, self.pos[0]), (dy, self.pos[1])] {
            if d > 1e-12 {
                best = best.min((h - p) / d);
            } else if d < -1e-12 {
                best = best.min((-h - p) / d);
            }
        }
        for o in &self.obstacles {
            let fx = self.pos[0] - o.center[0];
            let fy = self.pos[1] - o.center[1];
            let b = fx * dx + fy * dy;
            let c = fx * fx + fy * fy - o.radius * o.radius;
            let disc = b * b - c;
            if disc >= 0.0 {
                let t = -b - disc.sqrt();
                if t >= 0.0 {
                    best = best.min(t);
                } else if c < 0.0 {
                    best = 0.0;
                }
            }
        }
        best.max(0.0)
    }

    fn sample_point(&self, rng: &mut Rng, margin: f64) -> [f64; 2] {
        let lim = self.cfg.half_size - margin;
        [rng.uniform_range(-lim, lim), rng.uniform_range(-lim, lim)]
    }

    fn place_world(&mut self, rng: &mut Rng) -> Result<()> {
        let c = self.cfg.clone();
        let scenario = self.scenario.clone().unwrap_or_default();
        let margin = (c.robot_radius + c.goal_radius + 0.5).min(0.5 * c.half_size);

        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let start = scenario.start.map_or_else(|| self.sample_point(rng, margin), |s| [s[0], s[1]]);
            let goal = scenario.goal.unwrap_or_else(|| self.sample_point(rng, margin));
            let d = dist(start, goal);
            let fixed = scenario.start.is_some() && scenario.goal.is_some();
            if d > c.goal_radius && (fixed || (c.start_goal_min_dist..=c.start_goal_max_dist).contains(&d)) {
                self.start = start;
                self.goal = goal;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Env(format!(
                "no start/goal pair within [{}, {}] after {PLACEMENT_ATTEMPTS} attempts",
                c.start_goal_min_dist, c.start_goal_max_dist
            )));
        }

        self.obstacles = scenario.obstacles.clone();
        if scenario.obstacles.is_empty() {
            let clearance = c.robot_radius + 0.3;
            let mut attempts = 0;
            while self.obstacles.len() < c.num_obstacles {
                if attempts == PLACEMENT_ATTEMPTS {
                    return Err(Error::Env(format!(
                        "could not place {} obstacles after {PLACEMENT_ATTEMPTS} attempts",
                        c.num_obstacles
                    )));
                }
                attempts += 1;
                let radius = rng.uniform_range(c.obstacle_radius_min, c.obstacle_radius_max);
                let center = self.sample_point(rng, radius);
                let candidate = Obstacle { center, radius };
                let (_, off_path) = self.project(center);
                let clear = off_path > radius + clearance
                    && dist(center, self.start) > radius + clearance
                    && dist(center, self.goal) > radius + clearance + c.goal_radius
                    && self
                        .obstacles
                        .iter()
                        .all(|o| dist(o.center, center) > o.radius + radius);
                if clear {
                    self.obstacles.push(candidate);
                }
            }
        }
        if self.collides(self.start) {
            return Err(Error::Env("start position collides with the world".into()));
        }
        Ok(())
    }
}

impl Environment for PointGoal {
    fn obs_dim(&self) -> usize {
        POINTGOAL_OBS_DIM
    }

    fn act_dim(&self) -> usize {
        2
    }

    fn reset(&mut self, rng: &mut Rng) -> Result<Vec<f64>> {
        self.place_world(rng)?;
        let to_goal = (self.goal[1] - self.start[1]).atan2(self.goal[0] - self.start[0]);
        let noise = self.cfg.heading_noise;
        let jitter = rng.uniform_range(-noise, noise);
        self.heading = self
            .scenario
            .as_ref()
            .and_then(|s| s.start.map(|st| st[2]))
            .unwrap_or(to_goal + jitter);
        self.pos = self.start;
        self.speed = 0.0;
        self.ang_rate = 0.0;
        self.path_progress = self.project(self.pos).0;
        self.steps = 0;
        self.done = false;
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        check_action(action, 2)?;
        if self.done {
            return Err(Error::State("step called on a finished episode; reset first".into()));
        }
        let c = &self.cfg;
        let a = [action[0].clamp(-1.0, 1.0), action[1].clamp(-1.0, 1.0)];

        self.speed = (self.speed + a[0] * c.max_lin_accel * c.dt).clamp(0.0, c.v_max);
        self.ang_rate = (self.ang_rate + a[1] * c.max_ang_accel * c.dt).clamp(-c.max_ang_rate, c.max_ang_rate);
        self.heading = wrap_angle(self.heading + self.ang_rate * c.dt);
        self.pos[0] += self.speed * self.heading.cos() * c.dt;
        self.pos[1] += self.speed * self.heading.sin() * c.dt;
        self.steps += 1;

        let prev_progress = self.path_progress;
        let (progress, d_track) = self.project(self.pos);
        self.path_progress = progress;

        let r_p = reward_progress(prev_progress, progress, c.v_max, c.dt);
        let r_v = reward_velocity(self.speed, c.v_ref, c.v_max, c.kappa);
        let r_a = reward_action(&a);
        let r_x = match c.tracking {
            TrackingReward::Penalize => reward_tracking(d_track, c.d_track_max),
            TrackingReward::Literal => reward_tracking_literal(d_track, c.d_track_max),
        };

        let reached = dist(self.pos, self.goal) < c.goal_radius;
        let collided = !reached && self.collides(self.pos);
        let timeout = !reached && !collided && self.steps >= c.max_steps;
        let outcome = if reached {
            Outcome::Goal
        } else if collided {
            Outcome::Collision
        } else if timeout {
            Outcome::Timeout
        } else {
            Outcome::Running
        };
        let r_g = if reached { c.goal_bonus } else { 0.0 };
        let reward = RewardParts {
            r_fixed: r_g,
            r_base: c.shaping_scale * r_p,
            r_aux: c.aux_scale * (r_v + r_a + r_x),
        };
        let terminated = reached || collided;
        self.done = terminated || timeout;

        let raw_terms = BTreeMap::from([("r_g", r_g), ("r_p", r_p), ("r_v", r_v), ("r_a", r_a), ("r_x", r_x)]);
        Ok(EnvStep {
            next_observation: self.observation(),
            reward,
            terminated,
            truncated: timeout,
            info: StepInfo { outcome, raw_terms },
        })
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = (a + PI).rem_euclid(2.0 * PI) - PI;
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}
