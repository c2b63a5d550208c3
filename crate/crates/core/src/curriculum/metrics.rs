use log::warn;

use crate::{Error, Result};

/// Environment steps aggregated into one metric sample.
pub const DEFAULT_CADENCE: u64 = 1000;
/// Length of the rolling average applied to the base-reward means.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 20;

/// Windowed statistics that feed the switch predicates.
///
/// Per-step values are accumulated and, at every multiple of `cadence`,
/// reduced to one sample: the mean base reward of the window and the mean
/// actor loss over whatever updates reported one. Once `smoothing` samples
/// exist, each new sample also yields a rolling average of the last
/// `smoothing` base means.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricHistory {
    cadence: u64,
    smoothing: usize,
    init_steps: u64,
    last_step: u64,
    base_sum: f64,
    base_count: u64,
    loss_sum: f64,
    loss_count: u64,
    base_means: Vec<(u64, f64)>,
    smoothed: Vec<(u64, f64)>,
    actor_loss: Vec<(u64, Option<f64>)>,
    init_baseline: Option<f64>,
}

impl MetricHistory {
    pub fn new(cadence: u64, smoothing: usize) -> Self {
        Self::with_init_steps(cadence, smoothing, 0)
    }

    /// `init_steps` is the length of the random-policy warm-up whose base
    /// means define the improvement baseline.
    pub fn with_init_steps(cadence: u64, smoothing: usize, init_steps: u64) -> Self {
        assert!(cadence > 0 && smoothing > 0, "cadence and smoothing must be positive");
        Self {
            cadence,
            smoothing,
            init_steps,
            last_step: 0,
            base_sum: 0.0,
            base_count: 0,
            loss_sum: 0.0,
            loss_count: 0,
            base_means: Vec::new(),
            smoothed: Vec::new(),
            actor_loss: Vec::new(),
            init_baseline: None,
        }
    }

    pub fn cadence(&self) -> u64 {
        self.cadence
    }

    pub fn smoothing(&self) -> usize {
        self.smoothing
    }

    pub fn init_steps(&self) -> u64 {
        self.init_steps
    }

    /// Records one environment step. Returns `true` when the step closed a
    /// cadence window and a sample was appended.
    pub fn record_metric(&mut self, step: u64, r_base: f64, actor_loss: Option<f64>) -> Result<bool> {
        if step <= self.last_step {
            return Err(Error::State(format!(
                "metric step {step} does not advance past {}",
                self.last_step
            )));
        }
        self.last_step = step;
        if r_base.is_finite() {
            self.base_sum += r_base;
            self.base_count += 1;
        } else {
            warn!("skipping non-finite base reward at step {step}");
        }
        match actor_loss {
            Some(l) if l.is_finite() => {
                self.loss_sum += l;
                self.loss_count += 1;
            }
            Some(_) => warn!("skipping non-finite actor loss at step {step}"),
            None => {}
        }
        if step % self.cadence != 0 {
            return Ok(false);
        }
        let base = (self.base_count > 0).then(|| self.base_sum / self.base_count as f64);
        let loss = (self.loss_count > 0).then(|| self.loss_sum / self.loss_count as f64);
        self.base_sum = 0.0;
        self.base_count = 0;
        self.loss_sum = 0.0;
        self.loss_count = 0;
        match base {
            Some(b) => {
                self.push_sample(step, b, loss);
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Appends an already aggregated sample, as read back from a metrics
    /// log. Live recording goes through [`MetricHistory::record_metric`].
    pub fn push_sample(&mut self, step: u64, r_base_mean: f64, actor_loss: Option<f64>) {
        self.last_step = self.last_step.max(step);
        self.base_means.push((step, r_base_mean));
        self.actor_loss.push((step, actor_loss));
        if self.base_means.len() >= self.smoothing {
            let tail = &self.base_means[self.base_means.len() - self.smoothing..];
            let avg = tail.iter().map(|&(_, v)| v).sum::<f64>() / self.smoothing as f64;
            self.smoothed.push((step, avg));
        }
        if self.init_baseline.is_none() && self.init_steps > 0 && step >= self.init_steps {
            let init: Vec<f64> = self
                .base_means
                .iter()
                .filter(|&&(s, _)| s <= self.init_steps)
                .map(|&(_, v)| v)
                .collect();
            if !init.is_empty() {
                self.init_baseline = Some(init.iter().sum::<f64>() / init.len() as f64);
            }
        }
    }

    /// Rebuilds a history from aggregated samples.
    pub fn from_samples(
        cadence: u64,
        smoothing: usize,
        init_steps: u64,
        samples: impl IntoIterator<Item = (u64, f64, Option<f64>)>,
    ) -> Self {
        let mut h = Self::with_init_steps(cadence, smoothing, init_steps);
        for (step, base, loss) in samples {
            h.push_sample(step, base, loss);
        }
        h
    }

    /// Per-window mean base reward, one entry per cadence boundary.
    pub fn base_means(&self) -> &[(u64, f64)] {
        &self.base_means
    }

    /// Rolling average of [`MetricHistory::base_means`].
    pub fn smoothed_base(&self) -> &[(u64, f64)] {
        &self.smoothed
    }

    pub fn actor_losses(&self) -> &[(u64, Option<f64>)] {
        &self.actor_loss
    }

    pub fn latest_base_mean(&self) -> Option<f64> {
        self.base_means.last().map(|&(_, v)| v)
    }

    /// Mean base reward of the random-policy warm-up, once complete.
    pub fn init_baseline(&self) -> Option<f64> {
        self.init_baseline
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sample_per_cadence() {
        let mut h = MetricHistory::new(1000, 20);
        for t in 1..=999 {
            assert!(!h.record_metric(t, 0.5, None).unwrap());
        }
        assert!(h.base_means().is_empty());
        assert!(h.record_metric(1000, 0.5, None).unwrap());
        assert_eq!(h.base_means(), &[(1000, 0.5)]);
        assert_eq!(h.actor_losses(), &[(1000, None)]);
    }

    #[test]
    fn rolling_average_only_over_full_windows() {
        let mut h = MetricHistory::new(1, 20);
        for k in 1..=19 {
            h.record_metric(k, k as f64, None).unwrap();
        }
        assert!(h.smoothed_base().is_empty());
        h.record_metric(20, 20.0, None).unwrap();
        assert_eq!(h.smoothed_base(), &[(20, 10.5)]);
    }

    #[test]
    fn actor_loss_is_window_mean() {
        let mut h = MetricHistory::new(4, 20);
        h.record_metric(1, 0.0, Some(-10.0)).unwrap();
        h.record_metric(2, 0.0, None).unwrap();
        h.record_metric(3, 0.0, Some(-20.0)).unwrap();
        h.record_metric(4, 0.0, None).unwrap();
        assert_eq!(h.actor_losses(), &[(4, Some(-15.0))]);
    }

    #[test]
    fn non_finite_values_are_skipped() {
        let mut h = MetricHistory::new(2, 20);
        h.record_metric(1, f64::NAN, Some(f64::INFINITY)).unwrap();
        h.record_metric(2, 1.0, None).unwrap();
        assert_eq!(h.base_means(), &[(2, 1.0)]);
        assert_eq!(h.actor_losses(), &[(2, None)]);
    }

    #[test]
    fn steps_must_advance() {
        let mut h = MetricHistory::new(10, 20);
        h.record_metric(5, 0.0, None).unwrap();
        assert!(h.record_metric(5, 0.0, None).is_err());
    }

    #[test]
    fn init_baseline_from_warmup_windows() {
        let mut h = MetricHistory::with_init_steps(2, 20, 4);
        for (t, r) in [(1, 1.0), (2, 1.0), (3, 3.0), (4, 3.0), (5, 9.0), (6, 9.0)] {
            h.record_metric(t, r, None).unwrap();
        }
        assert_eq!(h.init_baseline(), Some(2.0));
    }

    #[test]
    fn replay_from_samples_matches_live() {
        let mut live = MetricHistory::with_init_steps(3, 4, 6);
        for t in 1..=60u64 {
            let r = ((t * 37) % 11) as f64 / 11.0;
            let l = (t % 2 == 0).then(|| -(t as f64));
            live.record_metric(t, r, l).unwrap();
        }
        let samples: Vec<_> = live
            .base_means()
            .iter()
            .zip(live.actor_losses())
            .map(|(&(s, b), &(_, l))| (s, b, l))
            .collect();
        let replayed = MetricHistory::from_samples(3, 4, 6, samples);
        assert_eq!(replayed.smoothed_base(), live.smoothed_base());
        assert_eq!(replayed.init_baseline(), live.init_baseline());
    }
}
