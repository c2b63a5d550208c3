//! Command-line front end: training, ablation sweeps, evaluation and plots.
//!
//! Config files are flat `section.key = value` text (see
//! [`TrainConfig::from_text`]); `--set key=value` overrides are applied
//! after the file. Exit codes are 0 on success, 1 on runtime failure and 2
//! on usage or configuration errors.

pub mod savgol;
pub mod sweep;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::agents::Policy;
use crate::envs::Outcome;
use crate::numerics::Rng;
use crate::trainer::{build_env, evaluate, parse_metrics_csv, MetricRow, TrainConfig, EVAL_STREAM};
use crate::Error;
use savgol::{savgol, DEFAULT_ORDER, DEFAULT_WINDOW};
use svg::LineChart;
use sweep::{run_jobs, seed_jobs, summarize, summary_csv, summary_table, variants, Ablation, Job};

/// Environment variable naming the default output root.
pub const OUT_ROOT_VAR: &str = "RCURRICULUM_OUT";

#[derive(Debug, Parser)]
#[command(name = "rcurriculum", version, about = "Two-stage reward curriculum for TD3 and SAC")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one run per seed.
    Train(RunArgs),
    /// Compare the three adaptive switches with three fixed switch steps.
    AblateSwitch(RunArgs),
    /// Compare step, linear and cosine annealing over three durations.
    AblateAnneal(RunArgs),
    /// Compare buffer and network resets at the phase switch.
    AblateReset(RunArgs),
    /// Evaluate a saved checkpoint deterministically.
    Eval(EvalArgs),
    /// Draw SVG charts from run directories.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat `section.key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one key, applied after the file. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Comma-separated seeds. Defaults to `run.seed`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Output directory. Defaults to `$RCURRICULUM_OUT/<command>_<env>_<agent>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Concurrent runs. Defaults to the available cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Agent checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Config describing the environment. Defaults to the run's `config.cfg`
    /// two levels above the checkpoint when present.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, default_value_t = 20)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Run directories containing `metrics.csv`.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Directory for the SVG files. Defaults to `$RCURRICULUM_OUT/plots`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Plot raw values.
    #[arg(long)]
    pub no_smooth: bool,
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Format(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Train(a) => cmd_train(&a),
        Command::AblateSwitch(a) => cmd_ablate(&a, Ablation::Switch),
        Command::AblateAnneal(a) => cmd_ablate(&a, Ablation::Anneal),
        Command::AblateReset(a) => cmd_ablate(&a, Ablation::Reset),
        Command::Eval(a) => cmd_eval(&a),
        Command::Plot(a) => cmd_plot(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_VAR).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

fn parse_overrides(set: &[String]) -> CliResult<Vec<(String, String)>> {
    set.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::usage(format!("override `{kv}` is not KEY=VALUE")))
        })
        .collect()
}

/// Reads the config file (if any) and applies the overrides.
pub fn load_config(path: Option<&Path>, set: &[String]) -> CliResult<TrainConfig> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::usage(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let cfg = TrainConfig::from_text(&text, &parse_overrides(set)?)?;
    cfg.validate()?;
    Ok(cfg)
}

fn workers(jobs: Option<usize>) -> usize {
    jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn seeds(args: &RunArgs, cfg: &TrainConfig) -> Vec<u64> {
    if args.seeds.is_empty() {
        vec![cfg.seed]
    } else {
        args.seeds.clone()
    }
}

fn default_out(command: &str, cfg: &TrainConfig) -> PathBuf {
    out_root().join(format!("{command}_{}_{}", cfg.env, cfg.agent))
}

fn finish(jobs: &[Job], results: Vec<crate::Result<crate::trainer::RunSummary>>) -> CliResult<Vec<crate::trainer::RunSummary>> {
    let mut ok = Vec::new();
    let mut first_err = None;
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(s) => ok.push(s),
            Err(e) => {
                eprintln!("{} seed {}: {e}", job.label, job.cfg.seed);
                first_err.get_or_insert(e);
            }
        }
    }
    match first_err {
        Some(e) => Err(CliError {
            code: 1,
            message: format!("{} of {} runs failed; first error: {e}", jobs.len() - ok.len(), jobs.len()),
        }),
        None => Ok(ok),
    }
}

fn cmd_train(args: &RunArgs) -> CliResult<()> {
    let cfg = load_config(args.config.as_deref(), &args.set)?;
    let root = args.out.clone().unwrap_or_else(|| default_out("train", &cfg));
    fs::create_dir_all(&root).map_err(|e| CliError::usage(format!("cannot create {}: {e}", root.display())))?;
    let jobs = seed_jobs("train", &cfg, &seeds(args, &cfg), &root);
    let results = run_jobs(&jobs, workers(args.jobs));
    let summaries = finish(&jobs, results)?;
    let row = summarize("train", &summaries);
    fs::write(root.join("summary.csv"), summary_csv(std::slice::from_ref(&row))).map_err(Error::from)?;
    print!("{}", summary_table(&[row]));
    Ok(())
}

fn cmd_ablate(args: &RunArgs, ablation: Ablation) -> CliResult<()> {
    let cfg = load_config(args.config.as_deref(), &args.set)?;
    let name = match ablation {
        Ablation::Switch => "ablate-switch",
        Ablation::Anneal => "ablate-anneal",
        Ablation::Reset => "ablate-reset",
    };
    let root = args.out.clone().unwrap_or_else(|| default_out(name, &cfg));
    fs::create_dir_all(&root).map_err(|e| CliError::usage(format!("cannot create {}: {e}", root.display())))?;
    let grid = variants(ablation, &cfg);
    let seeds = seeds(args, &cfg);
    let jobs: Vec<Job> = grid
        .iter()
        .flat_map(|v| seed_jobs(&v.name, &v.cfg, &seeds, &root.join(&v.name)))
        .collect();
    info!("{name}: {} configurations x {} seeds", grid.len(), seeds.len());
    let results = run_jobs(&jobs, workers(args.jobs));
    let summaries = finish(&jobs, results)?;
    let rows: Vec<_> = grid
        .iter()
        .zip(summaries.chunks(seeds.len()))
        .map(|(v, runs)| summarize(&v.name, runs))
        .collect();
    fs::write(root.join("summary.csv"), summary_csv(&rows)).map_err(Error::from)?;
    print!("{}", summary_table(&rows));
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let config = args.config.clone().or_else(|| {
        let guess = args.checkpoint.parent()?.parent()?.join("config.cfg");
        guess.exists().then_some(guess)
    });
    let cfg = load_config(config.as_deref(), &args.set)?;
    let file = fs::File::open(&args.checkpoint)
        .map_err(|e| CliError::usage(format!("cannot open {}: {e}", args.checkpoint.display())))?;
    let policy = Policy::load(std::io::BufReader::new(file))?;
    let (mut env, _) = build_env(&cfg)?;
    let mut rng = Rng::stream(args.seed, EVAL_STREAM);
    let report = evaluate(
        &policy,
        &mut env,
        args.episodes,
        &mut rng,
        cfg.curriculum.w_target,
        cfg.agent_cfg.gamma,
    )?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn smooth(ys: &[f64], args: &PlotArgs) -> CliResult<Vec<f64>> {
    if args.no_smooth {
        Ok(ys.to_vec())
    } else {
        Ok(savgol(ys, args.window, args.order)?)
    }
}

fn switch_step(rows: &[MetricRow]) -> Option<u64> {
    rows.iter().find(|r| r.phase == 1).map(|r| r.step)
}

fn cmd_plot(args: &PlotArgs) -> CliResult<()> {
    let out = args.out.clone().unwrap_or_else(|| out_root().join("plots"));
    let mut charts = Vec::new();
    for (i, dir) in args.runs.iter().enumerate() {
        let path = dir.join("metrics.csv");
        let text = fs::read_to_string(&path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
        let rows = parse_metrics_csv(&text)?;
        let name = dir
            .file_name()
            .map_or_else(|| format!("run{i}"), |n| n.to_string_lossy().into_owned());
        let prefix = format!("{i:02}_{name}");
        let xs: Vec<f64> = rows.iter().map(|r| r.step as f64).collect();
        let line = |ys: Vec<f64>| xs.iter().copied().zip(ys).collect::<Vec<_>>();
        let col = |f: fn(&MetricRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
        let mut rewards = LineChart::new(&format!("{name}: rewards"), "environment step", "mean reward per step")
            .series("r_base", line(smooth(&col(|r| r.r_base_mean), args)?))
            .series("r_aux", line(smooth(&col(|r| r.r_aux_mean), args)?))
            .series("r_w", line(smooth(&col(|r| r.r_w_mean), args)?));
        let mut weight = LineChart::new(&format!("{name}: curriculum weight"), "environment step", "w")
            .series("w", line(col(|r| r.w)));
        let evals: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.success_rate_eval.map(|s| (r.step as f64, s)))
            .collect();
        let train_success: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.outcomes.keys().any(|o| *o != Outcome::Running))
            .filter_map(|r| r.train_success_rate().map(|s| (r.step as f64, s)))
            .collect();
        let mut success = LineChart::new(&format!("{name}: success rate"), "environment step", "success rate")
            .series("evaluation", evals)
            .series("training episodes", train_success);
        if let Some(t) = switch_step(&rows) {
            rewards = rewards.marker(t as f64, "switch");
            weight = weight.marker(t as f64, "switch");
            success = success.marker(t as f64, "switch");
        }
        charts.push((format!("{prefix}_rewards.svg"), rewards));
        charts.push((format!("{prefix}_weight.svg"), weight));
        charts.push((format!("{prefix}_success.svg"), success));
    }
    fs::create_dir_all(&out).map_err(|e| CliError::usage(format!("cannot create {}: {e}", out.display())))?;
    for (file, chart) in charts {
        fs::write(out.join(&file), chart.render()).map_err(Error::from)?;
        println!("{}", out.join(file).display());
    }
    Ok(())
}
