//! Reference implementations shared by the integration tests. Everything here
//! is written with plain loops and no library numerics so it can serve as an
//! oracle for the optimized code paths.

#![allow(dead_code)]

pub mod curriculum;
pub mod envs;
pub mod grad;
pub mod runs;

use std::f64::consts::PI;

/// Fully connected ReLU network evaluated from a flat parameter vector laid
/// out per layer as a row-major `fan_in × fan_out` weight block followed by
/// the biases.
#[derive(Debug, Clone)]
pub struct RefMlp {
    pub sizes: Vec<usize>,
    pub gaussian_head: bool,
}

/// Records which side of every non-smooth point an evaluation landed on.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Branches(pub Vec<bool>);

impl Branches {
    pub fn push(&mut self, b: bool) {
        self.0.push(b);
    }
}

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

impl RefMlp {
    pub fn forward(&self, params: &[f64], x: &[f64], br: &mut Branches) -> Vec<f64> {
        let mut h = x.to_vec();
        let mut off = 0;
        let layers = self.sizes.len() - 1;
        for l in 0..layers {
            let (fi, fo) = (self.sizes[l], self.sizes[l + 1]);
            let w = &params[off..off + fi * fo];
            let b = &params[off + fi * fo..off + fi * fo + fo];
            off += fi * fo + fo;
            let mut z = vec![0.0; fo];
            for j in 0..fo {
                let mut acc = b[j];
                for i in 0..fi {
                    acc += h[i] * w[i * fo + j];
                }
                z[j] = acc;
            }
            if l + 1 < layers {
                for v in &mut z {
                    br.push(*v > 0.0);
                    *v = v.max(0.0);
                }
            }
            h = z;
        }
        if self.gaussian_head {
            let d = h.len() / 2;
            for v in &mut h[d..] {
                br.push(*v < LOG_STD_MIN);
                br.push(*v > LOG_STD_MAX);
                *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
            }
        }
        h
    }

    pub fn num_params(&self) -> usize {
        self.sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

pub fn huber_unit(d: f64, br: &mut Branches) -> f64 {
    br.push(d.abs() < 1.0);
    if d.abs() < 1.0 {
        0.5 * d * d
    } else {
        d.abs() - 0.5
    }
}

/// Log-density of `tanh(μ + σξ)` written from the change-of-variables formula.
pub fn squashed_log_prob(mu: f64, log_std: f64, xi: f64) -> (f64, f64) {
    let sigma = log_std.exp();
    let u = mu + sigma * xi;
    let a = u.tanh();
    let normal = -0.5 * xi * xi - log_std - 0.5 * (2.0 * PI).ln();
    // ln(1 − tanh²u) = −2 ln cosh u, evaluated without cancellation.
    let jac = -2.0 * (u.abs() + (-2.0 * u.abs()).exp().ln_1p() - std::f64::consts::LN_2);
    (a, normal - jac)
}

/// Central finite-difference gradient of `f` at `x`. Coordinates whose
/// perturbation changes the branch record are reported as `None`.
pub fn central_diff(
    f: &dyn Fn(&[f64], &mut Branches) -> f64,
    x: &[f64],
    h: f64,
) -> Vec<Option<f64>> {
    let mut base = Branches::default();
    f(x, &mut base);
    let mut out = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let orig = p[i];
        p[i] = orig + h;
        let mut bp = Branches::default();
        let fp = f(&p, &mut bp);
        p[i] = orig - h;
        let mut bm = Branches::default();
        let fm = f(&p, &mut bm);
        p[i] = orig;
        out.push((bp == base && bm == base).then(|| (fp - fm) / (2.0 * h)));
    }
    out
}

/// Relative agreement with an absolute floor for near-zero entries.
pub fn grad_close(analytic: f64, numeric: f64, rel: f64, floor: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= floor || diff <= rel * analytic.abs().max(numeric.abs())
}

/// Ordinary least-squares slope.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solves a small dense system by Gauss-Jordan elimination with partial
/// pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
