use std::ffi::CString;
use std::path::Path;
use std::process::Command;
use std::ptr;

use rcurriculum::agents::{Agent, AgentConfig, AgentKind};
use rcurriculum_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { rc_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn compose_and_anneal() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(rc_compose_reward(10.0, 0.02, -0.5, 0.75, &mut out), RcStatus::Ok);
        assert!((out - 9.63).abs() < 1e-12);
        assert_eq!(rc_compose_reward(0.0, 1.0, 2.0, 1.5, &mut out), RcStatus::InvalidArgument);
        assert!(last_error().contains("w"));
        assert_eq!(rc_anneal_factor(RcSchedule::Cosine, 100, 200, &mut out), RcStatus::Ok);
        assert_eq!(out, 0.5);
        assert_eq!(rc_anneal_factor(RcSchedule::Step, 0, 200, &mut out), RcStatus::Ok);
        assert_eq!(out, 1.0);
        assert_eq!(rc_anneal_factor(RcSchedule::Linear, 0, 10, ptr::null_mut()), RcStatus::NullPointer);
    }
}

#[test]
fn huber_and_velocity() {
    let ys: Vec<f64> = (0..30).map(|i| 2.0 + 0.5 * i as f64).collect();
    let mut slope = 0.0;
    unsafe {
        assert_eq!(rc_huber_slope(ys.as_ptr(), ys.len(), 1.35, &mut slope), RcStatus::Ok);
        assert!((slope - 0.5).abs() < 1e-9);
        assert_eq!(rc_huber_slope(ptr::null(), 5, 1.35, &mut slope), RcStatus::NullPointer);
        assert_eq!(rc_huber_slope(ys.as_ptr(), 1, 1.35, &mut slope), RcStatus::Insufficient);
        let mut r = 0.0;
        assert_eq!(rc_reward_velocity(1.2, 1.2, 1.5, 0.942, &mut r), RcStatus::Ok);
        assert_eq!(r, 1.0);
    }
}

#[test]
fn curriculum_handle_lifecycle() {
    let mut h: *mut RcCurriculum = ptr::null_mut();
    unsafe {
        assert_eq!(
            rc_curriculum_new(0.5, RcSchedule::Linear, 10_000, RcCriterion::Fixed, 3000, 1000, &mut h),
            RcStatus::Ok
        );
        let mut fire = true;
        let mut closed = false;
        for t in 1..=3000u64 {
            assert_eq!(rc_curriculum_record(h, t, 0.1, 0.0, false, &mut closed), RcStatus::Ok);
            assert_eq!(rc_curriculum_should_switch(h, t, &mut fire), RcStatus::Ok);
            assert_eq!(fire, t >= 3000);
        }
        assert!(closed);
        assert_eq!(rc_curriculum_record(h, 3000, 0.1, 0.0, false, &mut closed), RcStatus::InvalidState);
        assert_eq!(rc_curriculum_switch_at(h, 3000), RcStatus::Ok);
        assert_eq!(rc_curriculum_switch_at(h, 3001), RcStatus::InvalidState);
        let mut phase = 0u8;
        assert_eq!(rc_curriculum_phase(h, &mut phase), RcStatus::Ok);
        assert_eq!(phase, 1);
        let mut w = 0.0;
        assert_eq!(rc_curriculum_weight(h, 8000, &mut w), RcStatus::Ok);
        assert_eq!(w, 0.25);
        rc_curriculum_free(h);
        rc_curriculum_free(ptr::null_mut());
        assert_eq!(
            rc_curriculum_new(1.0, RcSchedule::Step, 0, RcCriterion::Convergence, 0, 0, &mut h),
            RcStatus::InvalidArgument
        );
        assert_eq!(rc_curriculum_weight(ptr::null_mut(), 1, &mut w), RcStatus::NullPointer);
    }
}

#[test]
fn env_rollout() {
    let mut h: *mut RcEnv = ptr::null_mut();
    unsafe {
        assert_eq!(rc_env_new(RcEnvKind::SwingUp, 7, &mut h), RcStatus::Ok);
        let (od, ad) = (rc_env_obs_dim(h), rc_env_act_dim(h));
        assert_eq!((od, ad), (3, 1));
        let mut obs = vec![0.0; od];
        assert_eq!(rc_env_reset(h, obs.as_mut_ptr(), od), RcStatus::Ok);
        let mut small = [0.0; 1];
        assert_eq!(rc_env_reset(h, small.as_mut_ptr(), 1), RcStatus::BufferTooSmall);
        let action = [0.3];
        let mut res = RcStepResult {
            r_fixed: f64::NAN,
            r_base: f64::NAN,
            r_aux: f64::NAN,
            terminated: true,
            truncated: true,
            outcome: RcOutcome::Goal,
        };
        assert_eq!(rc_env_step(h, action.as_ptr(), 1, obs.as_mut_ptr(), od, &mut res), RcStatus::Ok);
        assert!((0.0..=1.0).contains(&res.r_base));
        assert_eq!(res.r_fixed, 0.0);
        assert!(!res.terminated && !res.truncated);
        assert_eq!(res.outcome, RcOutcome::Running);
        let bad = [0.1, 0.2];
        assert_eq!(rc_env_step(h, bad.as_ptr(), 2, obs.as_mut_ptr(), od, &mut res), RcStatus::InvalidArgument);
        rc_env_free(h);
        assert_eq!(rc_env_obs_dim(ptr::null()), 0);
    }
}

#[test]
fn policy_matches_rust_side() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agent.ckpt");
    let cfg = AgentConfig {
        hidden: vec![8],
        ..AgentConfig::default()
    };
    let agent = Agent::new(AgentKind::Sac, 3, 1, &cfg, 11).unwrap();
    agent.save(std::fs::File::create(&path).unwrap()).unwrap();
    let expected = agent.policy().act(&[0.1, -0.4, 0.9]).unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut h: *mut RcPolicy = ptr::null_mut();
    unsafe {
        assert_eq!(rc_policy_load(c_path.as_ptr(), &mut h), RcStatus::Ok);
        assert_eq!(rc_policy_act_dim(h), 1);
        let obs = [0.1, -0.4, 0.9];
        let mut a = [0.0];
        assert_eq!(rc_policy_act(h, obs.as_ptr(), 3, a.as_mut_ptr(), 1), RcStatus::Ok);
        assert_eq!(a[0], expected[0]);
        assert_eq!(rc_policy_act(h, obs.as_ptr(), 2, a.as_mut_ptr(), 1), RcStatus::InvalidArgument);
        rc_policy_free(h);

        let missing = CString::new(dir.path().join("none").to_str().unwrap()).unwrap();
        assert_eq!(rc_policy_load(missing.as_ptr(), &mut h), RcStatus::Io);
        std::fs::write(&path, b"junk").unwrap();
        assert_eq!(rc_policy_load(c_path.as_ptr(), &mut h), RcStatus::Malformed);
    }
}

#[test]
fn error_message_truncates() {
    unsafe {
        let mut out = 0.0;
        rc_compose_reward(0.0, 0.0, 0.0, -1.0, &mut out);
        let full = rc_last_error_message(ptr::null_mut(), 0);
        assert!(full > 4);
        let mut buf = [1 as std::ffi::c_char; 4];
        assert_eq!(rc_last_error_message(buf.as_mut_ptr(), 4), full);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn header_is_current_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/rcurriculum.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "rc_compose_reward",
        "rc_curriculum_new",
        "rc_env_step",
        "rc_policy_act",
        "RC_STATUS_BUFFER_TOO_SMALL",
        "typedef struct RcEnv RcEnv;",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    assert!(status.success(), "header does not compile as C");
}
