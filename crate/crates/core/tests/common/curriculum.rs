//! Oracles for the curriculum schedule, reward blend, Huber slope and
//! convergence predicate.

use std::f64::consts::PI;

use rcurriculum::curriculum::{
    anneal_factor, huber_fit, huber_fit_slope, AnnealSchedule, CurriculumState, MetricHistory, SwitchCriterion,
    SwitchParams,
};
use rcurriculum::numerics::Rng;
use rcurriculum::replay::{compose_reward, Transition};

use super::ols_slope;

const SCHEDULES: [AnnealSchedule; 3] = [AnnealSchedule::Step, AnnealSchedule::Linear, AnnealSchedule::Cosine];

/// Exact anneal values at endpoints, midpoints and the cosine quarter point.
pub fn check_anneal_values() -> Result<(), String> {
    let mut rng = Rng::new(1);
    for _ in 0..1000 {
        let half = 1 + rng.index(1_000_000) as u64;
        let t = 4 * half;
        let checks = [
            (anneal_factor(AnnealSchedule::Step, 0, t), 1.0),
            (anneal_factor(AnnealSchedule::Step, half, t), 1.0),
            (anneal_factor(AnnealSchedule::Linear, 0, t), 0.0),
            (anneal_factor(AnnealSchedule::Linear, 2 * half, t), 0.5),
            (anneal_factor(AnnealSchedule::Linear, t, t), 1.0),
            (anneal_factor(AnnealSchedule::Linear, 3 * t, t), 1.0),
            (anneal_factor(AnnealSchedule::Cosine, 0, t), 0.0),
            (anneal_factor(AnnealSchedule::Cosine, 2 * half, t), 0.5),
            (anneal_factor(AnnealSchedule::Cosine, half, t), 0.5 * (1.0 - (PI / 4.0).cos())),
            (anneal_factor(AnnealSchedule::Cosine, t, t), 1.0),
        ];
        for (i, (got, want)) in checks.into_iter().enumerate() {
            if got.to_bits() != want.to_bits() {
                return Err(format!("anneal check {i} with T={t}: got {got:e}, want {want:e}"));
            }
        }
        for s in SCHEDULES {
            if anneal_factor(s, rng.index(10) as u64, 0) != 1.0 {
                return Err(format!("{s} with zero duration is not a step"));
            }
        }
    }
    Ok(())
}

fn transition(r_fixed: f64, r_base: f64, r_aux: f64) -> Transition {
    Transition {
        state: vec![0.0],
        action: vec![0.0],
        r_fixed,
        r_base,
        r_aux,
        next_state: vec![0.0],
        terminated: false,
        truncated: false,
    }
}

/// `w = 0` gives `r_fixed + r_base` and `w = 1` gives `r_fixed + r_aux`,
/// bit for bit.
pub fn check_compose_identities() -> Result<(), String> {
    let mut rng = Rng::new(2);
    for i in 0..100_000 {
        let r_fixed = if i % 3 == 0 { 0.0 } else { 10.0 * rng.normal() };
        let (r_base, r_aux) = (rng.normal() * 5.0, rng.normal() * 5.0);
        let t = transition(r_fixed, r_base, r_aux);
        let w0 = compose_reward(&t, 0.0).map_err(|e| e.to_string())?;
        let w1 = compose_reward(&t, 1.0).map_err(|e| e.to_string())?;
        if w0.to_bits() != (r_fixed + r_base).to_bits() || w1.to_bits() != (r_fixed + r_aux).to_bits() {
            return Err(format!("identity broken for ({r_fixed}, {r_base}, {r_aux}): {w0} {w1}"));
        }
    }
    for w in [-0.1, 1.1, f64::NAN] {
        if compose_reward(&transition(0.0, 1.0, 1.0), w).is_ok() {
            return Err(format!("weight {w} accepted"));
        }
    }
    Ok(())
}

/// Random curricula probed at random step pairs: the weight never
/// decreases, never exceeds the target and is zero before the switch.
pub fn check_weight_probes(probes: usize) -> Result<(), String> {
    let mut rng = Rng::new(3);
    let mut done = 0;
    while done < probes {
        let w_target = rng.uniform();
        let schedule = SCHEDULES[rng.index(3)];
        let anneal = if rng.index(5) == 0 { 0 } else { rng.index(300_000) as u64 };
        let mut st = CurriculumState::new(w_target, schedule, anneal, SwitchCriterion::Convergence)
            .map_err(|e| e.to_string())?;
        let t_switch = rng.index(1_000_000) as u64;
        for _ in 0..50 {
            let t = rng.index(2_000_000) as u64;
            if st.current_weight(t) != 0.0 {
                return Err(format!("nonzero weight before the switch at t={t}"));
            }
        }
        st.switch_at(t_switch).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let a = rng.index(2_000_000) as u64;
            let b = a + rng.index(50_000) as u64;
            let (wa, wb) = (st.current_weight(a), st.current_weight(b));
            if !(0.0..=w_target).contains(&wa) || !(0.0..=w_target).contains(&wb) {
                return Err(format!("weight outside [0, {w_target}] at {a}/{b}: {wa} {wb}"));
            }
            if wb < wa {
                return Err(format!("{schedule} over {anneal}: w({a})={wa} > w({b})={wb}"));
            }
            if a < t_switch && wa != 0.0 {
                return Err(format!("weight {wa} at {a} before switch step {t_switch}"));
            }
            if b >= t_switch + anneal && wb != w_target {
                return Err(format!("weight {wb} after anneal end differs from {w_target}"));
            }
            done += 1;
        }
    }
    Ok(())
}

fn huber_obj(xs: &[f64], ys: &[f64], a: f64, b: f64, scale: f64, eps: f64) -> f64 {
    let mut s = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let z = ((y - a - b * x) / scale).abs();
        s += if z <= eps { 0.5 * z * z } else { eps * z - 0.5 * eps * eps };
    }
    s
}

/// Minimum of a convex function on `[lo, hi]` by golden-section search.
fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force minimiser of the scaled Huber objective: nested golden
/// sections, intercept inside slope. Both profiles are convex.
pub fn brute_force_huber(xs: &[f64], ys: &[f64], scale: f64, eps: f64) -> (f64, f64) {
    let (ymin, ymax) = ys.iter().fold((f64::MAX, f64::MIN), |(l, h), &y| (l.min(y), h.max(y)));
    let (xmin, xmax) = xs.iter().fold((f64::MAX, f64::MIN), |(l, h), &x| (l.min(x), h.max(x)));
    let bound = 2.0 * (ymax - ymin) / (xmax - xmin) + 1.0;
    let best_a = |b: f64| {
        let off: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - b * x).collect();
        let (lo, hi) = off.iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
        golden_min(&|a| huber_obj(xs, ys, a, b, scale, eps), lo - 1.0, hi + 1.0, 120)
    };
    let b = golden_min(&|b| huber_obj(xs, ys, best_a(b), b, scale, eps), -bound, bound, 120);
    (best_a(b), b)
}

/// Summary of the randomized Huber comparison.
#[derive(Debug, Default)]
pub struct HuberReport {
    pub series: usize,
    pub max_slope_gap: f64,
    pub objective_worse: usize,
    pub ols_wins: usize,
}

/// Random 75-point lines with heavy one-sided outliers injected into one
/// end of the series, where they lever the least-squares slope.
pub fn check_huber_series(n_series: usize, seed: u64) -> HuberReport {
    let mut rng = Rng::new(seed);
    let mut rep = HuberReport::default();
    let eps = SwitchParams::default().eps_huber;
    for _ in 0..n_series {
        let slope = rng.uniform_range(-0.02, 0.02);
        let intercept = rng.uniform_range(-1.0, 1.0);
        let noise = rng.uniform_range(0.005, 0.05);
        let xs: Vec<f64> = (0..75).map(|i| i as f64).collect();
        let mut ys: Vec<f64> = xs.iter().map(|x| intercept + slope * x + noise * rng.normal()).collect();
        let n_out = 3 + rng.index(8);
        let sign = if rng.uniform() < 0.5 { 1.0 } else { -1.0 };
        let tail = rng.uniform() < 0.5;
        for _ in 0..n_out {
            let i = if tail { 50 + rng.index(25) } else { rng.index(25) };
            ys[i] += sign * noise * rng.uniform_range(15.0, 40.0);
        }
        let fit = huber_fit(&xs, &ys, eps).unwrap();
        let pts: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
        let b = huber_fit_slope(&pts, eps).unwrap();
        let (ba, bb) = brute_force_huber(&xs, &ys, fit.scale, eps);
        rep.max_slope_gap = rep.max_slope_gap.max((b - bb).abs());
        if fit.objective(&xs, &ys, eps) > huber_obj(&xs, &ys, ba, bb, fit.scale, eps) * (1.0 + 1e-12) + 1e-12 {
            rep.objective_worse += 1;
        }
        if (ols_slope(&xs, &ys) - slope).abs() <= (b - slope).abs() {
            rep.ols_wins += 1;
        }
        rep.series += 1;
    }
    rep
}

/// Independent Huber slope for the convergence replay: Theil–Sen start,
/// MAD scale, then iteratively reweighted least squares to a fixed point.
pub fn reference_huber_slope(ys: &[f64], eps: f64) -> f64 {
    let n = ys.len();
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let med = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    };
    let mut pair = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pair.push((ys[j] - ys[i]) / (j - i) as f64);
        }
    }
    let mut b = med(&mut pair);
    let mut a = med(&mut xs.iter().zip(ys).map(|(x, y)| y - b * x).collect());
    let mut res: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - a - b * x).collect();
    let rmed = med(&mut res.clone());
    let mut dev: Vec<f64> = res.iter().map(|r| (r - rmed).abs()).collect();
    let ymax = ys.iter().fold(1.0f64, |m, y| m.max(y.abs()));
    let delta = eps * (1.4826 * med(&mut dev)).max(1e-12 * ymax);
    for _ in 0..5000 {
        let w: Vec<f64> = res.iter().map(|r| if r.abs() <= delta { 1.0 } else { delta / r.abs() }).collect();
        let sw: f64 = w.iter().sum();
        let sx: f64 = w.iter().zip(&xs).map(|(w, x)| w * x).sum();
        let sy: f64 = w.iter().zip(ys).map(|(w, y)| w * y).sum();
        let sxx: f64 = w.iter().zip(&xs).map(|(w, x)| w * x * x).sum();
        let sxy: f64 = w.iter().zip(&xs).zip(ys).map(|((w, x), y)| w * x * y).sum();
        let nb = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
        let na = (sy - nb * sx) / sw;
        let done = (nb - b).abs() < 1e-14 && (na - a).abs() < 1e-14;
        a = na;
        b = nb;
        res = xs.iter().zip(ys).map(|(x, y)| y - a - b * x).collect();
        if done {
            break;
        }
    }
    b
}

/// Offline replay of the convergence predicate on a sequence of per-sample
/// base means. Returns the first sample index at which it holds.
pub fn replay_convergence(base: &[f64], cadence: u64, init_steps: u64, p: &SwitchParams, smoothing: usize) -> Option<usize> {
    let init: Vec<f64> = base
        .iter()
        .enumerate()
        .filter(|&(k, _)| (k as u64 + 1) * cadence <= init_steps)
        .map(|(_, &v)| v)
        .collect();
    let init_mean = init.iter().sum::<f64>() / init.len() as f64;
    let mut smoothed = Vec::new();
    for k in 0..base.len() {
        if k + 1 >= smoothing {
            smoothed.push(base[k + 1 - smoothing..=k].iter().sum::<f64>() / smoothing as f64);
        }
        if ((k as u64 + 1) * cadence) < init_steps || base[k] <= p.improvement_factor * init_mean {
            continue;
        }
        let win = p.regression_window;
        if smoothed.len() < win + p.m_conv - 1 {
            continue;
        }
        let all_flat = (smoothed.len() - p.m_conv + 1..=smoothed.len())
            .all(|end| reference_huber_slope(&smoothed[end - win..end], p.eps_huber) < p.eps_slope);
        if all_flat {
            return Some(k);
        }
    }
    None
}

/// Streams the same series through the library predicate.
pub fn library_convergence(base: &[f64], cadence: u64, init_steps: u64, p: &SwitchParams, smoothing: usize) -> Option<usize> {
    let st = CurriculumState::new(0.5, AnnealSchedule::Linear, 0, SwitchCriterion::Convergence).unwrap();
    let mut h = MetricHistory::with_init_steps(cadence, smoothing, init_steps);
    for (k, &b) in base.iter().enumerate() {
        let step = (k as u64 + 1) * cadence;
        h.push_sample(step, b, None);
        if st.should_switch(&h, p, step) {
            return Some(k);
        }
    }
    None
}

/// A noisy saturating rise followed by a plateau.
pub fn rise_then_plateau(rng: &mut Rng, len: usize) -> Vec<f64> {
    let start = rng.uniform_range(0.02, 0.1);
    let top = rng.uniform_range(0.4, 0.9);
    let tau = rng.uniform_range(10.0, 60.0);
    let onset = rng.uniform_range(5.0, 40.0);
    let noise = rng.uniform_range(0.002, 0.03);
    (0..len)
        .map(|k| {
            let t = (k as f64 - onset).max(0.0);
            start + (top - start) * (1.0 - (-t / tau).exp()) + noise * rng.normal()
        })
        .collect()
}

/// Fire indices (library, oracle) on `n` random series.
pub fn convergence_pairs(n: usize, seed: u64) -> Vec<(Option<usize>, Option<usize>)> {
    let mut rng = Rng::new(seed);
    let p = SwitchParams::default();
    (0..n)
        .map(|_| {
            let base = rise_then_plateau(&mut rng, 400);
            (
                library_convergence(&base, 1000, 10_000, &p, 20),
                replay_convergence(&base, 1000, 10_000, &p, 20),
            )
        })
        .collect()
}
