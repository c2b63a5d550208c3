//! C ABI over the `rcurriculum` crate.
//!
//! Every fallible function returns an [`RcStatus`]; results come back
//! through out-pointers. Objects are opaque handles created by a `*_new`
//! or `*_load` function and released with the matching `*_free`. The
//! message of the most recent failure on the calling thread is available
//! from [`rc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use rcurriculum::agents::Policy;
use rcurriculum::curriculum::{
    anneal_factor, huber_fit_slope, AnnealSchedule, CurriculumState, MetricHistory, SwitchCriterion, SwitchParams,
    DEFAULT_CADENCE, DEFAULT_SMOOTHING_WINDOW,
};
use rcurriculum::envs::rewards::reward_velocity;
use rcurriculum::envs::{
    AnyEnv, Environment, Outcome, PointGoal, PointGoalConfig, SwingUp, SwingUpConfig,
};
use rcurriculum::numerics::Rng;
use rcurriculum::replay::{compose_reward, Transition};
use rcurriculum::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    Insufficient = 4,
    EnvError = 5,
    Divergence = 6,
    InvalidState = 7,
    Malformed = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcSchedule {
    Step = 0,
    Linear = 1,
    Cosine = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcCriterion {
    ActorFit = 0,
    BaseThreshold = 1,
    Convergence = 2,
    /// Switch at the step given alongside the criterion.
    Fixed = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcEnvKind {
    PointGoal = 0,
    SwingUp = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcOutcome {
    Running = 0,
    Goal = 1,
    Timeout = 2,
    Collision = 3,
}

/// Reward channels and flags of one environment step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcStepResult {
    pub r_fixed: f64,
    pub r_base: f64,
    pub r_aux: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub outcome: RcOutcome,
}

/// Curriculum phase state plus its metric history.
pub struct RcCurriculum {
    state: CurriculumState,
    history: MetricHistory,
    params: SwitchParams,
}

/// A built-in environment with its own reset stream.
pub struct RcEnv {
    env: AnyEnv,
    rng: Rng,
}

/// A deterministic policy read from an agent checkpoint.
pub struct RcPolicy {
    policy: Policy,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> RcStatus {
    match e {
        Error::Config(_) => RcStatus::InvalidArgument,
        Error::NonFinite(_) => RcStatus::NonFinite,
        Error::Insufficient(_) => RcStatus::Insufficient,
        Error::Env(_) => RcStatus::EnvError,
        Error::Divergence(_) => RcStatus::Divergence,
        Error::State(_) => RcStatus::InvalidState,
        Error::Format(_) => RcStatus::Malformed,
        Error::Io(_) => RcStatus::Io,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard<F: FnOnce() -> Result<(), RcStatus>>(f: F) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RcStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            RcStatus::Panic
        }
    }
}

fn fail(e: Error) -> RcStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> RcStatus {
    set_error(format!("{what} is null"));
    RcStatus::NullPointer
}

fn invalid(msg: &str) -> RcStatus {
    set_error(msg);
    RcStatus::InvalidArgument
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), RcStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], RcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), RcStatus> {
    if len < values.len() {
        set_error(format!("output buffer holds {len} values, {} needed", values.len()));
        return Err(RcStatus::BufferTooSmall);
    }
    if values.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

unsafe fn handle<'a, T>(h: *mut T) -> Result<&'a mut T, RcStatus> {
    h.as_mut().ok_or_else(|| null("handle"))
}

fn schedule(s: RcSchedule) -> AnnealSchedule {
    match s {
        RcSchedule::Step => AnnealSchedule::Step,
        RcSchedule::Linear => AnnealSchedule::Linear,
        RcSchedule::Cosine => AnnealSchedule::Cosine,
    }
}

fn outcome(o: Outcome) -> RcOutcome {
    match o {
        Outcome::Running => RcOutcome::Running,
        Outcome::Goal => RcOutcome::Goal,
        Outcome::Timeout => RcOutcome::Timeout,
        Outcome::Collision => RcOutcome::Collision,
    }
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to `len` bytes. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn rc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `r_fixed + (1 - w) r_base + w r_aux`. Fails unless `w` is in `[0, 1]`.
///
/// # Safety
/// `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_compose_reward(r_fixed: f64, r_base: f64, r_aux: f64, w: f64, out: *mut f64) -> RcStatus {
    guard(|| {
        let t = Transition {
            state: Vec::new(),
            action: Vec::new(),
            r_fixed,
            r_base,
            r_aux,
            next_state: Vec::new(),
            terminated: false,
            truncated: false,
        };
        let r = compose_reward(&t, w).map_err(fail)?;
        write(out, r, "out")
    })
}

/// Annealing factor in `[0, 1]` after `elapsed` of `duration` steps.
///
/// # Safety
/// `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_anneal_factor(s: RcSchedule, elapsed: u64, duration: u64, out: *mut f64) -> RcStatus {
    guard(|| write(out, anneal_factor(schedule(s), elapsed, duration), "out"))
}

/// Huber-regression slope of `ys` against `0, 1, ..., n - 1`.
///
/// # Safety
/// `ys` must point to `n` readable values; `out` must be null or valid for
/// one write.
#[no_mangle]
pub unsafe extern "C" fn rc_huber_slope(ys: *const f64, n: usize, epsilon: f64, out: *mut f64) -> RcStatus {
    guard(|| {
        let ys = input(ys, n, "ys")?;
        let series: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let slope = huber_fit_slope(&series, epsilon).map_err(fail)?;
        write(out, slope, "out")
    })
}

/// Velocity-tracking reward term for speed `v`.
///
/// # Safety
/// `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_reward_velocity(v: f64, v_ref: f64, v_max: f64, kappa: f64, out: *mut f64) -> RcStatus {
    guard(|| write(out, reward_velocity(v, v_ref, v_max, kappa), "out"))
}

/// Creates a curriculum in phase 0 with default metric cadence, smoothing
/// and switch thresholds. `fixed_at` is read only for [`RcCriterion::Fixed`].
/// `init_steps` is the random warm-up length that defines the improvement
/// baseline.
///
/// # Safety
/// `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_curriculum_new(
    w_target: f64,
    s: RcSchedule,
    anneal_steps: u64,
    criterion: RcCriterion,
    fixed_at: u64,
    init_steps: u64,
    out: *mut *mut RcCurriculum,
) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let criterion = match criterion {
            RcCriterion::ActorFit => SwitchCriterion::ActorFit,
            RcCriterion::BaseThreshold => SwitchCriterion::BaseThreshold,
            RcCriterion::Convergence => SwitchCriterion::Convergence,
            RcCriterion::Fixed => SwitchCriterion::Fixed(fixed_at),
        };
        let state = CurriculumState::new(w_target, schedule(s), anneal_steps, criterion).map_err(fail)?;
        let boxed = Box::new(RcCurriculum {
            state,
            history: MetricHistory::with_init_steps(DEFAULT_CADENCE, DEFAULT_SMOOTHING_WINDOW, init_steps),
            params: SwitchParams::default(),
        });
        write(out, Box::into_raw(boxed), "out")
    })
}

/// # Safety
/// `h` must be null or a handle from [`rc_curriculum_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_curriculum_free(h: *mut RcCurriculum) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Records one environment step. `has_actor_loss` selects whether
/// `actor_loss` is used. `closed` receives whether a cadence window ended.
///
/// # Safety
/// `h` must be a live handle; `closed` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_curriculum_record(
    h: *mut RcCurriculum,
    step: u64,
    r_base: f64,
    actor_loss: f64,
    has_actor_loss: bool,
    closed: *mut bool,
) -> RcStatus {
    guard(|| {
        let c = handle(h)?;
        let loss = has_actor_loss.then_some(actor_loss);
        let done = c.history.record_metric(step, r_base, loss).map_err(fail)?;
        if !closed.is_null() {
            closed.write(done);
        }
        Ok(())
    })
}

/// Whether the configured switch predicate holds at step `t`.
///
/// # Safety
/// `h` must be a live handle; `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_curriculum_should_switch(h: *mut RcCurriculum, t: u64, out: *mut bool) -> RcStatus {
    guard(|| {
        let c = handle(h)?;
        let fire = c.state.should_switch(&c.history, &c.params, t);
        write(out, fire, "out")
    })
}

/// Enters phase 1 at step `t`. A second call fails with
/// [`RcStatus::InvalidState`].
///
/// # Safety
/// `h` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_curriculum_switch_at(h: *mut RcCurriculum, t: u64) -> RcStatus {
    guard(|| handle(h)?.state.switch_at(t).map_err(fail))
}

/// Curriculum weight at step `t`.
///
/// # Safety
/// `h` must be a live handle; `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_curriculum_weight(h: *mut RcCurriculum, t: u64, out: *mut f64) -> RcStatus {
    guard(|| {
        let w = handle(h)?.state.current_weight(t);
        write(out, w, "out")
    })
}

/// Current phase, 0 or 1.
///
/// # Safety
/// `h` must be a live handle; `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_curriculum_phase(h: *mut RcCurriculum, out: *mut u8) -> RcStatus {
    guard(|| {
        let p = handle(h)?.state.phase();
        write(out, p, "out")
    })
}

/// Creates an environment with default parameters whose resets draw from
/// `seed`.
///
/// # Safety
/// `out` must be null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_env_new(kind: RcEnvKind, seed: u64, out: *mut *mut RcEnv) -> RcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let env = match kind {
            RcEnvKind::PointGoal => AnyEnv::PointGoal(PointGoal::new(PointGoalConfig::default()).map_err(fail)?),
            RcEnvKind::SwingUp => AnyEnv::SwingUp(SwingUp::new(SwingUpConfig::default()).map_err(fail)?),
        };
        let boxed = Box::new(RcEnv {
            env,
            rng: Rng::new(seed),
        });
        write(out, Box::into_raw(boxed), "out")
    })
}

/// # Safety
/// `h` must be null or a handle from [`rc_env_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_env_free(h: *mut RcEnv) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Observation length, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_env_obs_dim(h: *const RcEnv) -> usize {
    h.as_ref().map_or(0, |e| e.env.obs_dim())
}

/// Action length, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_env_act_dim(h: *const RcEnv) -> usize {
    h.as_ref().map_or(0, |e| e.env.act_dim())
}

/// Starts an episode and writes the first observation.
///
/// # Safety
/// `h` must be a live handle; `obs` must point to `obs_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn rc_env_reset(h: *mut RcEnv, obs: *mut f64, obs_len: usize) -> RcStatus {
    guard(|| {
        let e = handle(h)?;
        let o = e.env.reset(&mut e.rng).map_err(fail)?;
        copy_out(&o, obs, obs_len)
    })
}

/// Advances one step with `action` and writes the next observation and the
/// step result.
///
/// # Safety
/// `h` must be a live handle; `action` must point to `act_len` values;
/// `obs` to `obs_len` writable values; `result` must be null or valid for
/// one write.
#[no_mangle]
pub unsafe extern "C" fn rc_env_step(
    h: *mut RcEnv,
    action: *const f64,
    act_len: usize,
    obs: *mut f64,
    obs_len: usize,
    result: *mut RcStepResult,
) -> RcStatus {
    guard(|| {
        let e = handle(h)?;
        let a = input(action, act_len, "action")?;
        let step = e.env.step(a).map_err(fail)?;
        copy_out(&step.next_observation, obs, obs_len)?;
        let r = RcStepResult {
            r_fixed: step.reward.r_fixed,
            r_base: step.reward.r_base,
            r_aux: step.reward.r_aux,
            terminated: step.terminated,
            truncated: step.truncated,
            outcome: outcome(step.info.outcome),
        };
        write(result, r, "result")
    })
}

/// Reads the actor from an agent checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be null or
/// valid for one write.
#[no_mangle]
pub unsafe extern "C" fn rc_policy_load(path: *const c_char, out: *mut *mut RcPolicy) -> RcStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| invalid("path is not UTF-8"))?;
        let file = File::open(path).map_err(|e| fail(Error::Io(e)))?;
        let policy = Policy::load(BufReader::new(file)).map_err(fail)?;
        write(out, Box::into_raw(Box::new(RcPolicy { policy })), "out")
    })
}

/// # Safety
/// `h` must be null or a handle from [`rc_policy_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rc_policy_free(h: *mut RcPolicy) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Action length, or 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rc_policy_act_dim(h: *const RcPolicy) -> usize {
    h.as_ref().map_or(0, |p| p.policy.act_dim())
}

/// Deterministic action for `obs`.
///
/// # Safety
/// `h` must be a live handle; `obs` must point to `obs_len` values and
/// `action` to `act_len` writable values.
#[no_mangle]
pub unsafe extern "C" fn rc_policy_act(
    h: *mut RcPolicy,
    obs: *const f64,
    obs_len: usize,
    action: *mut f64,
    act_len: usize,
) -> RcStatus {
    guard(|| {
        let p = handle(h)?;
        let o = input(obs, obs_len, "obs")?;
        let a = p.policy.act(o).map_err(fail)?;
        copy_out(&a, action, act_len)
    })
}
