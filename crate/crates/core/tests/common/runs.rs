//! Small training configurations shared by the run-level tests.

use rcurriculum::agents::AgentKind;
use rcurriculum::envs::EnvKind;
use rcurriculum::trainer::{train, TrainConfig};

/// A short run with a small network.
pub fn small(env: EnvKind, agent: AgentKind, total: u64) -> TrainConfig {
    let mut cfg = TrainConfig::for_env(env);
    cfg.agent = agent;
    cfg.total_steps = total;
    cfg.warmup_steps = 1000;
    cfg.batch_size = 32;
    cfg.buffer_capacity = total as usize;
    cfg.eval_every = 1000;
    cfg.eval_episodes = 1;
    cfg.agent_cfg.hidden = vec![16, 16];
    cfg.final_window = total / 2;
    cfg
}

/// Metrics CSVs of a curriculum run with `w_target = 0` and of the same-seed
/// run with the curriculum disabled.
pub fn transparency_pair(mut cfg: TrainConfig) -> (String, String) {
    cfg.curriculum.w_target = 0.0;
    cfg.curriculum.enabled = true;
    let with = train(&cfg, None).unwrap().metrics_csv;
    cfg.curriculum.enabled = false;
    let without = train(&cfg, None).unwrap().metrics_csv;
    (with, without)
}
