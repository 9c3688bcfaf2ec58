//! Small least-squares helpers: straight-line fits, log-log convergence
//! slopes, polynomial extrapolation to zero and a golden-section minimizer.

use crate::error::{Error, Result};

/// Values at or below this are treated as exact zeros in log-log fits.
pub const LOG_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope under iid residuals.
    pub slope_stderr: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let slope_stderr = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
    }
}

/// Slope of `ln|err|` against `ln(step)`, ignoring errors at or below
/// [`LOG_FLOOR`]. Needs at least three usable points.
pub fn loglog_slope(steps: &[f64], errors: &[f64]) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .zip(errors)
        .filter(|(h, e)| e.is_finite() && e.abs() > LOG_FLOOR && **h > 0.0)
        .map(|(h, e)| (h.ln(), e.abs().ln()))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::DegenerateFit { usable: xs.len() });
    }
    Ok(line_fit(&xs, &ys).slope)
}

/// Least-squares polynomial of degree `degree` through `(xs, ys)`, evaluated at 0.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64], degree: usize) -> f64 {
    let n = degree + 1;
    assert!(xs.len() >= n, "need at least {n} points for degree {degree}");
    // Normal equations in a rescaled variable keep the system well conditioned.
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let mut a = vec![vec![0.0; n + 1]; n];
    for (&x, &y) in xs.iter().zip(ys) {
        let t = x / scale;
        let pows: Vec<f64> = (0..n).map(|k| t.powi(k as i32)).collect();
        for r in 0..n {
            for c in 0..n {
                a[r][c] += pows[r] * pows[c];
            }
            a[r][n] += pows[r] * y;
        }
    }
    solve_dense(a)[0]
}

/// Gauss-Jordan with partial pivoting on an augmented `n x (n+1)` system.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let d = a[col][col];
        for c in col..=n {
            a[col][c] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    a.into_iter().map(|row| row[n]).collect()
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}
