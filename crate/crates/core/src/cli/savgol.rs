//! Savitzky-Golay smoothing by local least-squares polynomial fits.

use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 100;
pub const DEFAULT_ORDER: usize = 2;

/// Smooths `ys` (uniformly spaced) with a `window`-point polynomial fit of
/// degree `order`.
///
/// Each output `i` evaluates, at `i`, the least-squares polynomial over the
/// samples `i - (window - 1) / 2 ..= i + window / 2`. Near the ends the
/// window slides inward so it stays inside the series. Series shorter than
/// the window are fitted as a whole, with the degree capped at `len - 1`.
pub fn savgol(ys: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::config("smoothing window must be positive"));
    }
    if order >= window {
        return Err(Error::config(format!(
            "polynomial order {order} needs a window longer than {window}"
        )));
    }
    let n = ys.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let win = window.min(n);
    let order = order.min(win - 1);
    let back = (win - 1) / 2;
    let mut out = Vec::with_capacity(n);
    // Interior outputs share one set of weights.
    let interior = weights(win, order, back)?;
    for i in 0..n {
        let start = i.saturating_sub(back).min(n - win);
        let offset = i - start;
        let value = if offset == back {
            dot(&interior, &ys[start..start + win])
        } else {
            dot(&weights(win, order, offset)?, &ys[start..start + win])
        };
        out.push(value);
    }
    Ok(out)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear weights that map a window of samples to the fitted polynomial's
/// value at index `at`.
fn weights(win: usize, order: usize, at: usize) -> Result<Vec<f64>> {
    let m = order + 1;
    let scale = (win.max(2) - 1) as f64;
    let x = |j: usize| (j as f64 - at as f64) / scale;
    // Normal equations A^T A c = e_0 give the weights as A c.
    let mut gram = vec![0.0; m * m];
    for j in 0..win {
        let xj = x(j);
        let mut pows = vec![1.0; m];
        for p in 1..m {
            pows[p] = pows[p - 1] * xj;
        }
        for r in 0..m {
            for c in 0..m {
                gram[r * m + c] += pows[r] * pows[c];
            }
        }
    }
    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0;
    let coef = solve(&mut gram, &mut rhs, m)?;
    Ok((0..win)
        .map(|j| {
            let xj = x(j);
            let mut acc = 0.0;
            let mut p = 1.0;
            for c in &coef {
                acc += c * p;
                p *= xj;
            }
            acc
        })
        .collect())
}

/// Gaussian elimination with partial pivoting on an `m x m` system.
fn solve(a: &mut [f64], b: &mut [f64], m: usize) -> Result<Vec<f64>> {
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| a[i * m + col].abs().total_cmp(&a[j * m + col].abs()))
            .unwrap_or(col);
        if a[pivot * m + col].abs() < 1e-300 {
            return Err(Error::Insufficient("singular smoothing system".into()));
        }
        if pivot != col {
            for c in 0..m {
                a.swap(pivot * m + c, col * m + c);
            }
            b.swap(pivot, col);
        }
        for row in col + 1..m {
            let f = a[row * m + col] / a[col * m + col];
            for c in col..m {
                a[row * m + c] -= f * a[col * m + c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|c| a[row * m + c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row * m + row];
    }
    Ok(x)
}
