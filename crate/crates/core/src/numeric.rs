//! Scalar root bracketing and one-dimensional minimization.
//!
//! Everything here works on monotone or unimodal scalar functions where the
//! caller already knows a bracket; none of it tries to be a general solver.

use crate::error::{Error, Result};

const MAX_BISECT_ITERS: usize = 400;

/// Bisection on `[lo, hi]` for a function that changes sign on the bracket.
///
/// Runs until the bracket collapses to adjacent floating-point numbers (or
/// `xtol`, whichever is larger) and returns the endpoint with the smaller
/// residual.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, what: &'static str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoSignChange { what, lo, hi });
    }
    let mut f_hi = f_hi;
    for _ in 0..MAX_BISECT_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= xtol {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

/// Safeguarded Newton iteration for a strictly decreasing function with a
/// known sign-change bracket `f(lo) > 0 > f(hi)`.
///
/// A Newton step that leaves the current bracket is replaced by a bisection
/// step, so the iteration inherits bisection's convergence guarantee.
pub fn newton_decreasing<F, D>(
    f: F,
    df: D,
    mut lo: f64,
    mut hi: f64,
    what: &'static str,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoSignChange { what, lo, hi });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECT_ITERS {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::NoConvergence {
        what,
        iterations: MAX_BISECT_ITERS,
    })
}

/// Expands `hi` by doubling until `f(hi) < 0`, for a decreasing `f` with `f(lo) > 0`.
pub fn expand_upper<F>(f: F, lo: f64, mut hi: f64, what: &'static str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    for _ in 0..2000 {
        if f(hi) < 0.0 {
            return Ok(hi);
        }
        hi = lo + 2.0 * (hi - lo);
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::NoSignChange { what, lo, hi })
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
///
/// Returns `(x_min, f(x_min))` once the bracket is narrower than `xtol`.
pub fn golden_section<F>(f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Ordinary least-squares slope and intercept of `y` on `x`, with the
/// standard error of the slope.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = yi - (intercept + slope * xi);
            r * r
        })
        .sum();
    let stderr = if x.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    (slope, intercept, stderr)
}
