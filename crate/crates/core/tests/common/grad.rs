//! Finite-difference checks of the analytic loss gradients against losses
//! rebuilt from [`RefMlp`].

use rcurriculum::agents::losses::{
    alpha_loss_and_grad, critic_loss_and_grad, sac_actor_loss_and_grad, td3_actor_loss_and_grad,
};
use rcurriculum::numerics::{Matrix, MlpParams, OutputHead, Rng};

use super::{central_diff, grad_close, huber_unit, squashed_log_prob, Branches, RefMlp};

pub const REL_TOL: f64 = 1e-4;
pub const ABS_FLOOR: f64 = 1e-7;
const STEP: f64 = 1e-6;

/// Outcome of one family of gradient checks.
#[derive(Debug, Default, Clone)]
pub struct GradReport {
    pub cases: usize,
    pub checked: usize,
    pub skipped: usize,
    pub failures: Vec<String>,
    pub worst_rel: f64,
}

impl GradReport {
    pub fn ok(&self, min_cases: usize) -> bool {
        self.cases >= min_cases && self.checked > 0 && self.failures.is_empty() && self.skipped * 20 <= self.checked
    }

    fn compare(&mut self, label: &str, analytic: &[f64], numeric: &[Option<f64>]) {
        assert_eq!(analytic.len(), numeric.len());
        for (i, (&a, n)) in analytic.iter().zip(numeric).enumerate() {
            let Some(n) = *n else {
                self.skipped += 1;
                continue;
            };
            self.checked += 1;
            let scale = a.abs().max(n.abs());
            if scale > 0.0 && (a - n).abs() > ABS_FLOOR {
                self.worst_rel = self.worst_rel.max((a - n).abs() / scale);
            }
            if !grad_close(a, n, REL_TOL, ABS_FLOOR) {
                self.failures.push(format!("{label} param {i}: analytic {a:e} numeric {n:e}"));
            }
        }
    }
}

/// Shape of the random problems.
#[derive(Debug, Clone, Copy)]
pub struct Dims {
    pub obs: usize,
    pub act: usize,
    pub batch: usize,
}

fn random_dims(rng: &mut Rng) -> (Dims, Vec<usize>) {
    let dims = Dims {
        obs: 2 + rng.index(3),
        act: 1 + rng.index(2),
        batch: 4 + rng.index(6),
    };
    let hidden = (0..1 + rng.index(2)).map(|_| 3 + rng.index(5)).collect();
    (dims, hidden)
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = vec![input];
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

/// Builds a network and overwrites every parameter, biases included, with
/// random values so no unit starts exactly at a kink.
fn random_net(sizes: &[usize], head: OutputHead, scale: f64, rng: &mut Rng) -> MlpParams {
    let mut net = MlpParams::new(sizes, head, rng).unwrap();
    let flat: Vec<f64> = (0..net.num_params()).map(|_| scale * rng.normal()).collect();
    net.assign_flat(&flat).unwrap();
    net
}

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| scale * rng.normal()).collect()).unwrap()
}

fn refmlp(sizes: &[usize], gaussian: bool) -> RefMlp {
    RefMlp {
        sizes: sizes.to_vec(),
        gaussian_head: gaussian,
    }
}

fn apply_tanh(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(f64::tanh).collect()
}

/// Critic loss for both TD3 and SAC critics: mean Smooth-L1 between `Q(s,a)`
/// and fixed targets.
pub fn check_critic(cases: usize, seed: u64) -> GradReport {
    let mut rng = Rng::new(seed);
    let mut rep = GradReport::default();
    for case in 0..cases {
        let (d, hidden) = random_dims(&mut rng);
        let sz = sizes(d.obs + d.act, &hidden, 1);
        let critic = random_net(&sz, OutputHead::Linear, 0.6, &mut rng);
        let inputs = random_matrix(d.batch, d.obs + d.act, 1.0, &mut rng);
        // Wide targets so both Smooth-L1 regimes are exercised.
        let targets: Vec<f64> = (0..d.batch).map(|_| 2.0 * rng.normal()).collect();
        let (loss, grads) = critic_loss_and_grad(&critic, &inputs, &targets).unwrap();

        let r = refmlp(&sz, false);
        let f = |p: &[f64], br: &mut Branches| {
            let mut total = 0.0;
            for i in 0..d.batch {
                let q = r.forward(p, inputs.row(i), br)[0];
                total += huber_unit(q - targets[i], br);
            }
            total / d.batch as f64
        };
        let flat = critic.flatten();
        assert!((f(&flat, &mut Branches::default()) - loss).abs() < 1e-12);
        rep.compare(&format!("critic case {case}"), &grads.flatten(), &central_diff(&f, &flat, STEP));
        rep.cases += 1;
    }
    rep
}

/// Deterministic actor loss `−mean Q(s, tanh(actor(s)))`.
pub fn check_td3_actor(cases: usize, seed: u64) -> GradReport {
    let mut rng = Rng::new(seed);
    let mut rep = GradReport::default();
    for case in 0..cases {
        let (d, hidden) = random_dims(&mut rng);
        let asz = sizes(d.obs, &hidden, d.act);
        let csz = sizes(d.obs + d.act, &hidden, 1);
        let actor = random_net(&asz, OutputHead::TanhBounded, 0.6, &mut rng);
        let critic = random_net(&csz, OutputHead::Linear, 0.6, &mut rng);
        let states = random_matrix(d.batch, d.obs, 1.0, &mut rng);
        let (loss, grads) = td3_actor_loss_and_grad(&actor, &critic, &states).unwrap();

        let (ra, rc) = (refmlp(&asz, false), refmlp(&csz, false));
        let cflat = critic.flatten();
        let f = |p: &[f64], br: &mut Branches| {
            let mut total = 0.0;
            for i in 0..d.batch {
                let s = states.row(i);
                let mut x = s.to_vec();
                x.extend(apply_tanh(ra.forward(p, s, br)));
                total -= rc.forward(&cflat, &x, br)[0];
            }
            total / d.batch as f64
        };
        let flat = actor.flatten();
        assert!((f(&flat, &mut Branches::default()) - loss).abs() < 1e-12);
        rep.compare(&format!("td3 actor case {case}"), &grads.flatten(), &central_diff(&f, &flat, STEP));
        rep.cases += 1;
    }
    rep
}

/// Reparameterized SAC actor loss with frozen standard-normal noise.
pub fn check_sac_actor(cases: usize, seed: u64) -> GradReport {
    let mut rng = Rng::new(seed);
    let mut rep = GradReport::default();
    for case in 0..cases {
        let (d, hidden) = random_dims(&mut rng);
        let asz = sizes(d.obs, &hidden, 2 * d.act);
        let csz = sizes(d.obs + d.act, &hidden, 1);
        let actor = random_net(&asz, OutputHead::Gaussian, 0.4, &mut rng);
        let c1 = random_net(&csz, OutputHead::Linear, 0.6, &mut rng);
        let c2 = random_net(&csz, OutputHead::Linear, 0.6, &mut rng);
        let states = random_matrix(d.batch, d.obs, 1.0, &mut rng);
        let noise = random_matrix(d.batch, d.act, 1.0, &mut rng);
        let alpha = 0.05 + rng.uniform();
        let out = sac_actor_loss_and_grad(&actor, &c1, &c2, &states, &noise, alpha).unwrap();

        let ra = refmlp(&asz, true);
        let rc = refmlp(&csz, false);
        let (f1, f2) = (c1.flatten(), c2.flatten());
        let f = |p: &[f64], br: &mut Branches| {
            let mut total = 0.0;
            for i in 0..d.batch {
                let s = states.row(i);
                let head = ra.forward(p, s, br);
                let mut x = s.to_vec();
                let mut logp = 0.0;
                for j in 0..d.act {
                    let (a, lp) = squashed_log_prob(head[j], head[d.act + j], noise.get(i, j));
                    x.push(a);
                    logp += lp;
                }
                let q1 = rc.forward(&f1, &x, br)[0];
                let q2 = rc.forward(&f2, &x, br)[0];
                br.push(q1 <= q2);
                total += alpha * logp - q1.min(q2);
            }
            total / d.batch as f64
        };
        let flat = actor.flatten();
        assert!((f(&flat, &mut Branches::default()) - out.loss).abs() < 1e-9);
        rep.compare(&format!("sac actor case {case}"), &out.grads.flatten(), &central_diff(&f, &flat, STEP));
        rep.cases += 1;
    }
    rep
}

/// Temperature loss as a function of `log α`.
pub fn check_alpha(cases: usize, seed: u64) -> GradReport {
    let mut rng = Rng::new(seed);
    let mut rep = GradReport::default();
    for case in 0..cases {
        let n = 1 + rng.index(16);
        let log_probs: Vec<f64> = (0..n).map(|_| 2.0 * rng.normal()).collect();
        let target = -(1.0 + rng.index(3) as f64);
        let log_alpha = rng.uniform_range(-4.0, 1.0);
        let (_, grad) = alpha_loss_and_grad(log_alpha, &log_probs, target);
        let f = |p: &[f64], _: &mut Branches| {
            let mean = log_probs.iter().map(|lp| lp + target).sum::<f64>() / n as f64;
            -p[0].exp() * mean
        };
        rep.compare(&format!("alpha case {case}"), &[grad], &central_diff(&f, &[log_alpha], STEP));
        rep.cases += 1;
    }
    rep
}
