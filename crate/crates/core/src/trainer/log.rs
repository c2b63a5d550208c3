use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::envs::Outcome;
use crate::{Error, Result};

pub const METRICS_HEADER: &str = "step,phase,w,r_base_mean,r_aux_mean,r_w_mean,actor_loss,actor_loss_no_entropy,\
critic1_loss,critic2_loss,alpha,success_rate_eval,episode_outcome_counts";

const OUTCOME_ORDER: [Outcome; 3] = [Outcome::Goal, Outcome::Timeout, Outcome::Collision];

/// One metrics CSV row, covering the cadence window that ends at `step`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub step: u64,
    pub phase: u8,
    /// Weight in force at `step`.
    pub w: f64,
    pub r_base_mean: f64,
    pub r_aux_mean: f64,
    /// Mean composed reward, each step composed with its own weight.
    pub r_w_mean: f64,
    pub actor_loss: Option<f64>,
    pub actor_loss_no_entropy: Option<f64>,
    pub critic1_loss: Option<f64>,
    pub critic2_loss: Option<f64>,
    pub alpha: Option<f64>,
    pub success_rate_eval: Option<f64>,
    /// Episodes that ended inside the window, by outcome.
    pub outcomes: BTreeMap<Outcome, usize>,
}

impl MetricRow {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.phase,
            self.w,
            self.r_base_mean,
            self.r_aux_mean,
            self.r_w_mean,
            opt(self.actor_loss),
            opt(self.actor_loss_no_entropy),
            opt(self.critic1_loss),
            opt(self.critic2_loss),
            opt(self.alpha),
            opt(self.success_rate_eval),
            format_outcomes(&self.outcomes),
        )
        .expect("writing to a string");
        s
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != 13 {
            return Err(Error::Format(format!("metrics row has {} fields, expected 13", f.len())));
        }
        Ok(Self {
            step: field(f[0], "step")?,
            phase: field(f[1], "phase")?,
            w: field(f[2], "w")?,
            r_base_mean: field(f[3], "r_base_mean")?,
            r_aux_mean: field(f[4], "r_aux_mean")?,
            r_w_mean: field(f[5], "r_w_mean")?,
            actor_loss: opt_field(f[6], "actor_loss")?,
            actor_loss_no_entropy: opt_field(f[7], "actor_loss_no_entropy")?,
            critic1_loss: opt_field(f[8], "critic1_loss")?,
            critic2_loss: opt_field(f[9], "critic2_loss")?,
            alpha: opt_field(f[10], "alpha")?,
            success_rate_eval: opt_field(f[11], "success_rate_eval")?,
            outcomes: parse_outcomes(f[12])?,
        })
    }

    /// Goal fraction among training episodes that ended in this window.
    pub fn train_success_rate(&self) -> Option<f64> {
        let total: usize = self.outcomes.values().sum();
        (total > 0).then(|| self.outcomes.get(&Outcome::Goal).copied().unwrap_or(0) as f64 / total as f64)
    }
}

/// Parses a full metrics CSV, header included.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == METRICS_HEADER => {}
        _ => return Err(Error::Format("metrics CSV header missing or unexpected".into())),
    }
    lines.filter(|l| !l.trim().is_empty()).map(MetricRow::from_csv).collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Format(format!("bad {name} value `{s}`")))
}

fn opt_field(s: &str, name: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        field(s, name).map(Some)
    }
}

fn format_outcomes(m: &BTreeMap<Outcome, usize>) -> String {
    OUTCOME_ORDER
        .iter()
        .map(|o| format!("{o}:{}", m.get(o).copied().unwrap_or(0)))
        .collect::<Vec<_>>()
        .join("|")
}

fn parse_outcomes(s: &str) -> Result<BTreeMap<Outcome, usize>> {
    let mut m = BTreeMap::new();
    for part in s.split('|').filter(|p| !p.is_empty()) {
        let (name, n) = part
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("bad outcome count `{part}`")))?;
        let o = match name {
            "goal" => Outcome::Goal,
            "timeout" => Outcome::Timeout,
            "collision" => Outcome::Collision,
            other => return Err(Error::Format(format!("unknown outcome `{other}`"))),
        };
        let n: usize = field(n, "outcome count")?;
        if n > 0 {
            m.insert(o, n);
        }
    }
    Ok(m)
}

/// One line of the JSON-lines event log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub step: u64,
    pub event: String,
    pub payload: serde_json::Value,
}

impl Event {
    pub fn new(step: u64, event: &str, payload: serde_json::Value) -> Self {
        Self {
            step,
            event: event.to_string(),
            payload,
        }
    }
}
