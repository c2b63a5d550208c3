//! Robust straight-line fit with the Huber loss.
//!
//! The residual scale is fixed before the fit: a Theil–Sen line provides
//! preliminary residuals and their median absolute deviation, times
//! [`MAD_TO_SIGMA`], is the scale. The fit then minimises
//! `Σ ρ_ε(r_i / σ)` over intercept and slope, which is convex, so the
//! minimiser is unique whenever the inliers span two distinct x values.

use crate::{Error, Result};

/// Consistency factor turning a MAD into a normal standard deviation.
pub const MAD_TO_SIGMA: f64 = 1.4826;

const IRLS_MAX_ITERS: usize = 500;
const ACTIVE_SET_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberFit {
    pub intercept: f64,
    pub slope: f64,
    /// Residual scale the loss was standardised with.
    pub scale: f64,
}

impl HuberFit {
    /// `Σ ρ_ε((y − a − b·x) / σ)`.
    pub fn objective(&self, xs: &[f64], ys: &[f64], epsilon: f64) -> f64 {
        huber_objective(xs, ys, self.intercept, self.slope, self.scale, epsilon)
    }
}

pub(crate) fn huber_objective(xs: &[f64], ys: &[f64], a: f64, b: f64, scale: f64, epsilon: f64) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let z = ((y - a - b * x) / scale).abs();
            if z <= epsilon {
                0.5 * z * z
            } else {
                epsilon * z - 0.5 * epsilon * epsilon
            }
        })
        .sum()
}

/// Slope of the Huber fit through `(x, y)` points.
pub fn huber_fit_slope(series: &[(f64, f64)], epsilon: f64) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series.iter().copied().unzip();
    Ok(huber_fit(&xs, &ys, epsilon)?.slope)
}

pub fn huber_fit(xs: &[f64], ys: &[f64], epsilon: f64) -> Result<HuberFit> {
    if xs.len() != ys.len() {
        return Err(Error::config("huber fit: x and y lengths differ"));
    }
    if xs.len() < 2 {
        return Err(Error::Insufficient("huber fit needs at least two points".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::config(format!("huber epsilon must be positive, got {epsilon}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("huber fit input".into()));
    }
    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let xc: Vec<f64> = xs.iter().map(|x| x - x_mean).collect();
    if xc.iter().all(|&x| x == 0.0) {
        return Err(Error::config("huber fit needs at least two distinct x values"));
    }

    let (a0, b0) = theil_sen(&xc, ys);
    let residuals: Vec<f64> = xc.iter().zip(ys).map(|(x, y)| y - a0 - b0 * x).collect();
    let y_scale = ys.iter().fold(1.0f64, |m, y| m.max(y.abs()));
    let scale = (MAD_TO_SIGMA * mad(&residuals)).max(1e-12 * y_scale);
    let delta = epsilon * scale;

    let (mut a, mut b) = (a0, b0);
    for _ in 0..IRLS_MAX_ITERS {
        let weights: Vec<f64> = xc
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = (y - a - b * x).abs();
                if r <= delta {
                    1.0
                } else {
                    delta / r
                }
            })
            .collect();
        let Some((na, nb)) = weighted_line(&xc, ys, &weights) else {
            break;
        };
        let converged = (na - a).abs() <= 1e-15 * (1.0 + a.abs()) && (nb - b).abs() <= 1e-15 * (1.0 + b.abs());
        a = na;
        b = nb;
        if converged {
            break;
        }
    }

    // IRLS converges linearly; finish by solving the stationarity equations
    // for the current inlier/outlier partition until it stops changing.
    let mut best = huber_objective(&xc, ys, a, b, scale, epsilon);
    for _ in 0..ACTIVE_SET_MAX_ITERS {
        let Some((na, nb)) = active_set_solve(&xc, ys, a, b, delta) else {
            break;
        };
        let obj = huber_objective(&xc, ys, na, nb, scale, epsilon);
        if obj > best || (na == a && nb == b) {
            break;
        }
        best = obj;
        a = na;
        b = nb;
    }

    Ok(HuberFit {
        intercept: a - b * x_mean,
        slope: b,
        scale,
    })
}

/// Median of pairwise slopes, intercept the median of `y − b·x`.
fn theil_sen(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mut slopes = Vec::with_capacity(xs.len() * (xs.len() - 1) / 2);
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dx = xs[j] - xs[i];
            if dx != 0.0 {
                slopes.push((ys[j] - ys[i]) / dx);
            }
        }
    }
    let b = median(&mut slopes);
    let mut offsets: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - b * x).collect();
    (median(&mut offsets), b)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mad(v: &[f64]) -> f64 {
    let mut tmp = v.to_vec();
    let m = median(&mut tmp);
    let mut dev: Vec<f64> = v.iter().map(|r| (r - m).abs()).collect();
    median(&mut dev)
}

/// Weighted least-squares line; `None` if the weighted design is singular.
fn weighted_line(xs: &[f64], ys: &[f64], w: &[f64]) -> Option<(f64, f64)> {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &y), &wi) in xs.iter().zip(ys).zip(w) {
        s0 += wi;
        s1 += wi * x;
        s2 += wi * x * x;
        t0 += wi * y;
        t1 += wi * x * y;
    }
    solve2(s0, s1, s2, t0, t1)
}

/// Stationary point of the Huber objective for the partition induced by
/// `(a, b)`: inliers contribute their residuals, outliers a constant pull of
/// `±delta`.
fn active_set_solve(xs: &[f64], ys: &[f64], a: f64, b: f64, delta: f64) -> Option<(f64, f64)> {
    let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let r = y - a - b * x;
        if r.abs() <= delta {
            s0 += 1.0;
            s1 += x;
            s2 += x * x;
            t0 += y;
            t1 += x * y;
        } else {
            let pull = delta * r.signum();
            t0 += pull;
            t1 += pull * x;
        }
    }
    solve2(s0, s1, s2, t0, t1)
}

/// Solves `[[s0, s1], [s1, s2]] · (a, b) = (t0, t1)`.
fn solve2(s0: f64, s1: f64, s2: f64, t0: f64, t1: f64) -> Option<(f64, f64)> {
    let det = s0 * s2 - s1 * s1;
    if det.abs() <= 1e-12 * (s0 * s2).abs().max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(((t0 * s2 - s1 * t1) / det, (s0 * t1 - s1 * t0) / det))
}
