//! Ablation grids and multi-seed execution.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::info;

use crate::curriculum::{AnnealSchedule, SwitchCriterion};
use crate::envs::EnvKind;
use crate::trainer::{run_dir, train, ResetAblation, RunSummary, TrainConfig};
use crate::{Error, Result};

/// Training length of the reference experiments each desk budget is scaled
/// against.
pub fn reference_total_steps(env: EnvKind) -> u64 {
    match env {
        EnvKind::PointGoal => 1_000_000,
        EnvKind::SwingUp => 2_000_000,
    }
}

/// Scales a reference step count by `total_steps / reference_total_steps`,
/// rounded to the nearest multiple of the metric cadence.
pub fn scale_steps(reference: u64, cfg: &TrainConfig) -> u64 {
    let factor = cfg.total_steps as f64 / reference_total_steps(cfg.env) as f64;
    let cadence = cfg.curriculum.cadence as f64;
    ((reference as f64 * factor / cadence).round() * cadence) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablation {
    Switch,
    Anneal,
    Reset,
}

/// One named configuration of an ablation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub name: String,
    pub cfg: TrainConfig,
}

/// Expands `base` into the configurations of `ablation`.
pub fn variants(ablation: Ablation, base: &TrainConfig) -> Vec<Variant> {
    let with = |name: String, f: &dyn Fn(&mut TrainConfig)| {
        let mut cfg = base.clone();
        cfg.curriculum.enabled = true;
        f(&mut cfg);
        Variant { name, cfg }
    };
    match ablation {
        Ablation::Switch => {
            let anneal = scale_steps(100_000, base);
            let mut out: Vec<Variant> = [
                SwitchCriterion::ActorFit,
                SwitchCriterion::BaseThreshold,
                SwitchCriterion::Convergence,
            ]
            .into_iter()
            .map(|c| {
                with(c.to_string(), &|cfg| {
                    cfg.curriculum.criterion = c;
                    cfg.curriculum.schedule = AnnealSchedule::Linear;
                    cfg.curriculum.anneal_steps = anneal;
                })
            })
            .collect();
            for k in [250_000u64, 500_000, 1_000_000] {
                let at = scale_steps(k, base);
                out.push(with(format!("fixed_{}k", k / 1000), &|cfg| {
                    cfg.curriculum.criterion = SwitchCriterion::Fixed(at);
                    cfg.curriculum.schedule = AnnealSchedule::Linear;
                    cfg.curriculum.anneal_steps = anneal;
                }));
            }
            out
        }
        Ablation::Anneal => {
            let mut out = vec![with("step".into(), &|cfg| {
                cfg.curriculum.schedule = AnnealSchedule::Step;
                cfg.curriculum.anneal_steps = 0;
            })];
            for schedule in [AnnealSchedule::Linear, AnnealSchedule::Cosine] {
                for k in [50_000u64, 100_000, 200_000] {
                    let steps = scale_steps(k, base);
                    out.push(with(format!("{schedule}_{}k", k / 1000), &|cfg| {
                        cfg.curriculum.schedule = schedule;
                        cfg.curriculum.anneal_steps = steps;
                    }));
                }
            }
            out
        }
        Ablation::Reset => {
            let anneal = scale_steps(200_000, base);
            [ResetAblation::None, ResetAblation::ResetBuffer, ResetAblation::ResetNetworks]
                .into_iter()
                .map(|mode| {
                    with(mode.to_string(), &|cfg| {
                        cfg.reset = mode;
                        cfg.curriculum.schedule = AnnealSchedule::Linear;
                        cfg.curriculum.anneal_steps = anneal;
                    })
                })
                .collect()
        }
    }
}

/// A run to execute: configuration plus output directory.
#[derive(Debug, Clone)]
pub struct Job {
    pub label: String,
    pub cfg: TrainConfig,
    pub dir: PathBuf,
}

/// One job per seed of `cfg`, in `root/seed_<k>`.
pub fn seed_jobs(label: &str, cfg: &TrainConfig, seeds: &[u64], root: &Path) -> Vec<Job> {
    seeds
        .iter()
        .map(|&seed| {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            Job {
                label: label.to_string(),
                cfg,
                dir: run_dir(root, seed),
            }
        })
        .collect()
}

/// Runs `jobs` on up to `workers` threads. Results keep job order.
pub fn run_jobs(jobs: &[Job], workers: usize) -> Vec<Result<RunSummary>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunSummary>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = jobs.get(i) else { break };
                info!("starting {} seed {} -> {}", job.label, job.cfg.seed, job.dir.display());
                let r = train(&job.cfg, Some(&job.dir)).map(|r| r.summary);
                match &r {
                    Ok(s) => info!("finished {} seed {}: r_base {:.4}", job.label, s.seed, s.final_r_base),
                    Err(e) => log::error!("{} seed {} failed: {e}", job.label, job.cfg.seed),
                }
                results.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.unwrap_or_else(|| Err(Error::State("job never ran".into()))))
        .collect()
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Seed aggregate of one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub variant: String,
    pub seeds: usize,
    pub r_base: (f64, f64),
    pub r_w: (f64, f64),
    pub success: Option<(f64, f64)>,
    pub switched: usize,
}

pub fn summarize(variant: &str, runs: &[RunSummary]) -> SummaryRow {
    let col = |f: &dyn Fn(&RunSummary) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
    let success: Vec<f64> = runs.iter().filter_map(|r| r.final_success_rate).collect();
    SummaryRow {
        variant: variant.to_string(),
        seeds: runs.len(),
        r_base: col(&|r| r.final_r_base),
        r_w: col(&|r| r.final_r_w),
        success: (success.len() == runs.len() && !runs.is_empty()).then(|| mean_std(&success)),
        switched: runs.iter().filter(|r| r.t_switch.is_some()).count(),
    }
}

pub const SUMMARY_HEADER: &str =
    "variant,seeds,r_base_mean,r_base_std,r_w_mean,r_w_std,success_mean,success_std,switched";

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let (sm, ss) = r
            .success
            .map_or((String::new(), String::new()), |(m, sd)| (m.to_string(), sd.to_string()));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.variant, r.seeds, r.r_base.0, r.r_base.1, r.r_w.0, r.r_w.1, sm, ss, r.switched
        );
    }
    s
}

/// Fixed-width table for the terminal.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:<26} {:>5} {:>22} {:>22} {:>18} {:>8}\n",
        "variant", "seeds", "final r_base", "final r_w", "success", "switched"
    );
    for r in rows {
        let success = r
            .success
            .map_or_else(|| "-".to_string(), |(m, sd)| format!("{m:.3} ± {sd:.3}"));
        let _ = writeln!(
            s,
            "{:<26} {:>5} {:>22} {:>22} {:>18} {:>8}",
            r.variant,
            r.seeds,
            format!("{:.4} ± {:.4}", r.r_base.0, r.r_base.1),
            format!("{:.4} ± {:.4}", r.r_w.0, r.r_w.1),
            success,
            r.switched
        );
    }
    s
}
