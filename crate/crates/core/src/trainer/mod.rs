//! Training loop, evaluation and run artifacts.
//!
//! A run collects one transition per environment step, keeps the reward
//! channels separate in the replay buffer, and composes them at the current
//! curriculum weight only when a batch is drawn for an update.

mod config;
mod eval;
mod log;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

pub use config::{parse_pairs, CurriculumConfig, ResetAblation, TrainConfig};
pub use eval::{evaluate, Actor, EvalReport};
pub use log::{parse_metrics_csv, Event, MetricRow, METRICS_HEADER};

use crate::agents::{Agent, UpdateStats};
use crate::curriculum::{CurriculumState, MetricHistory};
use crate::envs::{AnyEnv, EnvKind, Environment, Outcome, PointGoal, Scenario, SwingUp};
use crate::numerics::Rng;
use crate::replay::{compose, ReplayBuffer, Transition};
use crate::{Error, Result};

/// RNG stream for environment resets.
pub const ENV_STREAM: u64 = 3;
/// RNG stream for warm-up actions and exploration noise.
pub const ACT_STREAM: u64 = 4;
/// RNG stream for replay sampling.
pub const REPLAY_STREAM: u64 = 5;
/// RNG stream for evaluation resets, restarted for every evaluation.
pub const EVAL_STREAM: u64 = 6;

/// Final-window aggregates of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub env_steps: u64,
    pub updates: u64,
    pub t_switch: Option<u64>,
    pub final_r_base: f64,
    pub final_r_aux: f64,
    pub final_r_w: f64,
    /// Mean of the logged evaluation success rates inside the window.
    pub final_success_rate: Option<f64>,
    /// Goal fraction among training episodes ending inside the window.
    pub final_train_success_rate: Option<f64>,
    pub final_eval_r_base: Option<f64>,
}

/// Everything a run produced, kept in memory as well as on disk.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: TrainConfig,
    pub rows: Vec<MetricRow>,
    pub metrics_csv: String,
    pub events: Vec<Event>,
    pub evals: Vec<(u64, EvalReport)>,
    pub history: MetricHistory,
    pub summary: RunSummary,
    pub agent: Agent,
}

impl RunResult {
    pub fn t_switch(&self) -> Option<u64> {
        self.summary.t_switch
    }
}

/// Builds the configured environment together with its reset stream.
pub fn build_env(cfg: &TrainConfig) -> Result<(AnyEnv, Rng)> {
    let mut env_seed = cfg.seed;
    let env = match cfg.env {
        EnvKind::PointGoal => match &cfg.scenario {
            Some(path) => {
                let scenario = Scenario::load(path)?;
                if let Some(s) = scenario.seed {
                    env_seed = s;
                }
                AnyEnv::PointGoal(PointGoal::with_scenario(cfg.pointgoal.clone(), scenario)?)
            }
            None => AnyEnv::PointGoal(PointGoal::new(cfg.pointgoal.clone())?),
        },
        EnvKind::SwingUp => AnyEnv::SwingUp(SwingUp::new(cfg.swingup.clone())?),
    };
    Ok((env, Rng::stream(env_seed, ENV_STREAM)))
}

/// Runs one training run and writes its artifacts to `out_dir` when given.
pub fn train(cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<RunResult> {
    train_observed(cfg, out_dir, &mut |_, _| {})
}

/// Like [`train`], calling `on_update(step, w)` before every gradient update.
pub fn train_observed(
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
    on_update: &mut dyn FnMut(u64, f64),
) -> Result<RunResult> {
    cfg.validate()?;
    let mut run = Run::new(cfg)?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.cfg"), cfg.to_text())?;
    }
    let outcome = run.execute(out_dir, on_update);
    if let Err(e) = &outcome {
        run.events.push(Event::new(run.step, "abort", json!({ "error": e.to_string() })));
    }
    if let Some(dir) = out_dir {
        run.write_artifacts(dir)?;
    }
    outcome?;
    let summary = run.summary();
    if let Some(dir) = out_dir {
        let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(dir.join("summary.json"), text)?;
    }
    Ok(RunResult {
        config: cfg.clone(),
        metrics_csv: run.metrics_csv(),
        rows: run.rows,
        events: run.events,
        evals: run.evals,
        history: run.history,
        summary,
        agent: run.agent,
    })
}

/// Running sums for the current cadence window.
#[derive(Debug, Default)]
struct Window {
    steps: usize,
    r_base: f64,
    r_aux: f64,
    r_w: f64,
    actor_loss: f64,
    actor_loss_n: usize,
    critic1: f64,
    critic2: f64,
    critic_n: usize,
    alpha: f64,
    alpha_n: usize,
    outcomes: BTreeMap<Outcome, usize>,
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

struct Run<'a> {
    cfg: &'a TrainConfig,
    env: AnyEnv,
    eval_env: AnyEnv,
    env_rng: Rng,
    act_rng: Rng,
    replay_rng: Rng,
    agent: Agent,
    buffer: ReplayBuffer,
    curriculum: CurriculumState,
    history: MetricHistory,
    rows: Vec<MetricRow>,
    events: Vec<Event>,
    evals: Vec<(u64, EvalReport)>,
    step: u64,
    updates: u64,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a TrainConfig) -> Result<Self> {
        let (env, env_rng) = build_env(cfg)?;
        let (eval_env, _) = build_env(cfg)?;
        let (obs, act) = (env.obs_dim(), env.act_dim());
        let c = &cfg.curriculum;
        Ok(Self {
            agent: Agent::new(cfg.agent, obs, act, &cfg.agent_cfg, cfg.seed)?,
            buffer: ReplayBuffer::new(cfg.buffer_capacity, obs, act)?,
            curriculum: CurriculumState::new(c.w_target, c.schedule, c.anneal_steps, c.criterion)?,
            history: MetricHistory::with_init_steps(c.cadence, c.smoothing, cfg.warmup_steps),
            env,
            eval_env,
            env_rng,
            act_rng: Rng::stream(cfg.seed, ACT_STREAM),
            replay_rng: Rng::stream(cfg.seed, REPLAY_STREAM),
            rows: Vec::new(),
            events: Vec::new(),
            evals: Vec::new(),
            step: 0,
            updates: 0,
            cfg,
        })
    }

    fn weight(&self, t: u64) -> f64 {
        if self.cfg.curriculum.enabled {
            self.curriculum.current_weight(t)
        } else {
            self.cfg.curriculum.w_target
        }
    }

    fn execute(&mut self, out_dir: Option<&Path>, on_update: &mut dyn FnMut(u64, f64)) -> Result<()> {
        let cfg = self.cfg;
        let act_dim = self.env.act_dim();
        let mut obs = self.env.reset(&mut self.env_rng)?;
        let mut window = Window::default();
        let mut last_actor_loss: Option<f64> = None;
        let mut last_actor_loss_no_entropy: Option<f64> = None;
        let mut pending = 0.0;
        let mut annealing = false;

        for t in 1..=cfg.total_steps {
            self.step = t;
            let action = if t <= cfg.warmup_steps {
                (0..act_dim).map(|_| self.act_rng.uniform_range(-1.0, 1.0)).collect()
            } else {
                self.agent.act(&obs, true, t, &mut self.act_rng)?
            };
            let out = self.env.step(&action)?;
            let r = out.reward;
            self.buffer.push(Transition {
                state: obs,
                action,
                r_fixed: r.r_fixed,
                r_base: r.r_base,
                r_aux: r.r_aux,
                next_state: out.next_observation.clone(),
                terminated: out.terminated,
                truncated: out.truncated,
            })?;
            if out.done() {
                *window.outcomes.entry(out.info.outcome).or_insert(0) += 1;
                obs = self.env.reset(&mut self.env_rng)?;
            } else {
                obs = out.next_observation;
            }

            if let Some(l) = last_actor_loss {
                window.actor_loss += l;
                window.actor_loss_n += 1;
            }
            let closed = self.history.record_metric(t, r.r_base, last_actor_loss_no_entropy)?;

            if cfg.curriculum.enabled
                && self.curriculum.phase() == 0
                && self.curriculum.should_switch(&self.history, &cfg.curriculum.switch, t)
            {
                self.switch(t)?;
                annealing = true;
            }
            let w = self.weight(t);

            window.steps += 1;
            window.r_base += r.r_base;
            window.r_aux += r.r_aux;
            window.r_w += compose(r.r_fixed, r.r_base, r.r_aux, w);

            last_actor_loss = None;
            last_actor_loss_no_entropy = None;
            if t > cfg.warmup_steps {
                pending += cfg.replay_ratio;
                let mut step_losses = (0.0, 0.0, 0usize);
                while pending >= 1.0 {
                    pending -= 1.0;
                    // Only empty right after a buffer reset.
                    if self.buffer.is_empty() {
                        continue;
                    }
                    let batch = self.buffer.sample_batch(cfg.batch_size.min(self.buffer.len()), &mut self.replay_rng)?;
                    on_update(t, w);
                    let stats = self.agent.update(&batch, w)?;
                    self.updates += 1;
                    accumulate(&mut window, &stats, &mut step_losses);
                }
                if step_losses.2 > 0 {
                    last_actor_loss = Some(step_losses.0 / step_losses.2 as f64);
                    last_actor_loss_no_entropy = Some(step_losses.1 / step_losses.2 as f64);
                }
            }

            let eval_due = t % cfg.eval_every.max(1) == 0 || t == cfg.total_steps;
            let success = if eval_due { Some(self.evaluate(t)?) } else { None };

            if t % cfg.curriculum.cadence == 0 {
                let row = self.close_window(t, w, closed, success, &mut window);
                if annealing {
                    self.events.push(Event::new(t, "anneal", json!({ "w": w })));
                    if w >= self.curriculum.w_target() {
                        annealing = false;
                        self.events.push(Event::new(t, "anneal_complete", json!({ "w": w })));
                    }
                }
                self.rows.push(row);
            }

            if cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0 {
                if let Some(dir) = out_dir {
                    self.write_checkpoint(dir, &format!("step_{t}.ckpt"))?;
                }
            }
        }
        if let Some(dir) = out_dir {
            self.write_checkpoint(dir, "final.ckpt")?;
        }
        Ok(())
    }

    fn switch(&mut self, t: u64) -> Result<()> {
        self.curriculum.switch_at(t)?;
        let c = &self.cfg.curriculum;
        self.events.push(Event::new(
            t,
            "switch",
            json!({
                "criterion": c.criterion.to_string(),
                "w_target": c.w_target,
                "schedule": c.schedule.to_string(),
                "anneal_steps": c.anneal_steps,
            }),
        ));
        match self.cfg.reset {
            ResetAblation::None => {}
            ResetAblation::ResetBuffer => {
                let dropped = self.buffer.len();
                self.buffer.clear();
                self.events
                    .push(Event::new(t, "reset", json!({ "mode": self.cfg.reset.to_string(), "dropped": dropped })));
            }
            ResetAblation::ResetNetworks => {
                self.agent = Agent::new(
                    self.cfg.agent,
                    self.env.obs_dim(),
                    self.env.act_dim(),
                    &self.cfg.agent_cfg,
                    self.cfg.seed,
                )?;
                self.events.push(Event::new(t, "reset", json!({ "mode": self.cfg.reset.to_string() })));
            }
        }
        Ok(())
    }

    fn evaluate(&mut self, t: u64) -> Result<f64> {
        let mut rng = Rng::stream(self.cfg.seed, EVAL_STREAM);
        let report = evaluate(
            &self.agent.policy(),
            &mut self.eval_env,
            self.cfg.eval_episodes,
            &mut rng,
            self.cfg.curriculum.w_target,
            self.cfg.agent_cfg.gamma,
        )?;
        let success = report.success_rate;
        self.evals.push((t, report));
        Ok(success)
    }

    fn close_window(&self, t: u64, w: f64, closed: bool, success: Option<f64>, window: &mut Window) -> MetricRow {
        let n = window.steps;
        let history_loss = if closed {
            self.history.actor_losses().last().and_then(|&(_, l)| l)
        } else {
            None
        };
        let row = MetricRow {
            step: t,
            phase: self.curriculum.phase(),
            w,
            r_base_mean: if closed {
                self.history.base_means().last().map(|&(_, b)| b).unwrap_or(0.0)
            } else {
                window.r_base / n as f64
            },
            r_aux_mean: window.r_aux / n as f64,
            r_w_mean: window.r_w / n as f64,
            actor_loss: mean(window.actor_loss, window.actor_loss_n),
            actor_loss_no_entropy: history_loss,
            critic1_loss: mean(window.critic1, window.critic_n),
            critic2_loss: mean(window.critic2, window.critic_n),
            alpha: mean(window.alpha, window.alpha_n),
            success_rate_eval: success,
            outcomes: std::mem::take(&mut window.outcomes),
        };
        *window = Window::default();
        row
    }

    fn write_checkpoint(&self, dir: &Path, name: &str) -> Result<()> {
        let ckpt_dir = dir.join("checkpoints");
        fs::create_dir_all(&ckpt_dir)?;
        let mut f = BufWriter::new(fs::File::create(ckpt_dir.join(name))?);
        self.agent.save(&mut f)?;
        f.flush()?;
        Ok(())
    }

    fn metrics_csv(&self) -> String {
        let mut s = String::with_capacity(128 * (self.rows.len() + 1));
        s.push_str(METRICS_HEADER);
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.to_csv());
            s.push('\n');
        }
        s
    }

    fn write_artifacts(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("metrics.csv"), self.metrics_csv())?;
        let mut events = String::new();
        for e in &self.events {
            events.push_str(&serde_json::to_string(e).map_err(|e| Error::Format(e.to_string()))?);
            events.push('\n');
        }
        fs::write(dir.join("events.jsonl"), events)?;
        let mut eval = String::from("step,success_rate,mean_r_base,mean_r_w_target,mean_return,mean_length\n");
        for (t, r) in &self.evals {
            eval.push_str(&format!(
                "{t},{},{},{},{},{}\n",
                r.success_rate, r.mean_r_base, r.mean_r_w_target, r.mean_return, r.mean_length
            ));
        }
        fs::write(dir.join("eval.csv"), eval)?;
        Ok(())
    }

    fn summary(&self) -> RunSummary {
        let cfg = self.cfg;
        let start = cfg.total_steps.saturating_sub(cfg.final_window);
        let rows: Vec<&MetricRow> = self.rows.iter().filter(|r| r.step > start).collect();
        let avg = |f: &dyn Fn(&MetricRow) -> f64| -> f64 {
            rows.iter().map(|r| f(r)).sum::<f64>() / rows.len().max(1) as f64
        };
        let evals: Vec<&EvalReport> = self.evals.iter().filter(|(t, _)| *t > start).map(|(_, r)| r).collect();
        let success: Vec<f64> = rows.iter().filter_map(|r| r.success_rate_eval).collect();
        let mut goals = 0usize;
        let mut episodes = 0usize;
        for r in &rows {
            goals += r.outcomes.get(&Outcome::Goal).copied().unwrap_or(0);
            episodes += r.outcomes.values().sum::<usize>();
        }
        RunSummary {
            seed: cfg.seed,
            env_steps: self.step,
            updates: self.updates,
            t_switch: self.curriculum.t_switch(),
            final_r_base: avg(&|r| r.r_base_mean),
            final_r_aux: avg(&|r| r.r_aux_mean),
            final_r_w: avg(&|r| r.r_w_mean),
            final_success_rate: (!success.is_empty()).then(|| success.iter().sum::<f64>() / success.len() as f64),
            final_train_success_rate: (episodes > 0).then(|| goals as f64 / episodes as f64),
            final_eval_r_base: (!evals.is_empty())
                .then(|| evals.iter().map(|r| r.mean_r_base).sum::<f64>() / evals.len() as f64),
        }
    }
}

fn accumulate(window: &mut Window, stats: &UpdateStats, step_losses: &mut (f64, f64, usize)) {
    window.critic1 += stats.critic1_loss;
    window.critic2 += stats.critic2_loss;
    window.critic_n += 1;
    if let Some(a) = stats.alpha {
        window.alpha += a;
        window.alpha_n += 1;
    }
    if let (Some(l), Some(ln)) = (stats.actor_loss, stats.actor_loss_no_entropy) {
        step_losses.0 += l;
        step_losses.1 += ln;
        step_losses.2 += 1;
    }
}

/// Variance of the per-window base-reward means in `(t_switch, t_switch + span]`.
pub fn post_switch_variance(rows: &[MetricRow], t_switch: u64, span: u64) -> Option<f64> {
    let xs: Vec<f64> = rows
        .iter()
        .filter(|r| r.step > t_switch && r.step <= t_switch + span)
        .map(|r| r.r_base_mean)
        .collect();
    if xs.len() < 2 {
        return None;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    Some(xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// Directory for seed `seed` under `root`.
pub fn run_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed_{seed}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::AgentKind;
    use crate::curriculum::{AnnealSchedule, SwitchCriterion};

    fn tiny(env: EnvKind, agent: AgentKind) -> TrainConfig {
        let mut cfg = TrainConfig::for_env(env);
        cfg.agent = agent;
        cfg.total_steps = 3000;
        cfg.warmup_steps = 1000;
        cfg.batch_size = 32;
        cfg.buffer_capacity = 10_000;
        cfg.eval_every = 1000;
        cfg.eval_episodes = 1;
        cfg.agent_cfg.hidden = vec![16];
        cfg.swingup.max_steps = 200;
        cfg.final_window = 2000;
        cfg
    }

    #[test]
    fn step_and_update_accounting() {
        let mut cfg = tiny(EnvKind::SwingUp, AgentKind::Td3);
        cfg.replay_ratio = 0.5;
        let r = train(&cfg, None).unwrap();
        assert_eq!(r.summary.env_steps, 3000);
        assert_eq!(r.summary.updates, 1000);
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows[0].critic1_loss.is_none());
        assert!(r.rows[2].critic1_loss.is_some());
    }

    #[test]
    fn fixed_step_switch_jumps_weight() {
        let mut cfg = tiny(EnvKind::SwingUp, AgentKind::Sac);
        cfg.curriculum.criterion = SwitchCriterion::Fixed(2000);
        cfg.curriculum.schedule = AnnealSchedule::Step;
        cfg.curriculum.w_target = 0.4;
        let mut seen = Vec::new();
        let r = train_observed(&cfg, None, &mut |t, w| seen.push((t, w))).unwrap();
        assert_eq!(r.t_switch(), Some(2000));
        assert!(seen.iter().all(|&(t, w)| if t < 2000 { w == 0.0 } else { w == 0.4 }));
        let ws: Vec<f64> = r.rows.iter().map(|row| row.w).collect();
        assert_eq!(ws, vec![0.0, 0.4, 0.4]);
        assert_eq!(r.events[0].event, "switch");
        assert_eq!(r.events[0].step, 2000);
    }

    #[test]
    fn reset_buffer_empties_replay() {
        let mut cfg = tiny(EnvKind::SwingUp, AgentKind::Td3);
        cfg.curriculum.criterion = SwitchCriterion::Fixed(1500);
        cfg.reset = ResetAblation::ResetBuffer;
        let r = train(&cfg, None).unwrap();
        let reset = r.events.iter().find(|e| e.event == "reset").unwrap();
        assert_eq!(reset.step, 1500);
        assert_eq!(reset.payload["dropped"], 1500);
        assert_eq!(r.summary.updates, 1999);
    }

    #[test]
    fn artifacts_written() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(EnvKind::PointGoal, AgentKind::Sac);
        let r = train(&cfg, Some(dir.path())).unwrap();
        let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(csv, r.metrics_csv);
        assert_eq!(parse_metrics_csv(&csv).unwrap(), r.rows);
        assert!(dir.path().join("checkpoints/final.ckpt").exists());
        assert!(dir.path().join("summary.json").exists());
        let back = TrainConfig::from_text(&fs::read_to_string(dir.path().join("config.cfg")).unwrap(), &[]).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn variance_helper() {
        let row = |step, b| MetricRow {
            step,
            phase: 1,
            w: 0.0,
            r_base_mean: b,
            r_aux_mean: 0.0,
            r_w_mean: 0.0,
            actor_loss: None,
            actor_loss_no_entropy: None,
            critic1_loss: None,
            critic2_loss: None,
            alpha: None,
            success_rate_eval: None,
            outcomes: BTreeMap::new(),
        };
        let rows = vec![row(1000, 5.0), row(2000, 1.0), row(3000, 3.0), row(4000, 100.0)];
        assert_eq!(post_switch_variance(&rows, 1000, 2000), Some(2.0));
        assert_eq!(post_switch_variance(&rows, 3000, 500), None);
    }
}
