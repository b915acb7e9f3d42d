//! Bracketed scalar root finding.

use crate::error::{Error, Result};

pub const MAX_BISECTIONS: usize = 200;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs (or one
/// is zero). Stops when `|f| < f_tol` or the bracket collapses to `x_tol`.
/// Returns the midpoint of the final bracket.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, f_tol: f64, x_tol: f64) -> Result<f64>
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
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::invalid("bracket", "endpoints do not bracket a root"));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() < f_tol || f_mid == 0.0 {
            return Ok(mid);
        }
        if (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_BISECTIONS,
    })
}

/// Smallest `t` in `(lo, hi]` (to within `t_tol`) for which `pred` holds,
/// given `!pred(lo)` and `pred(hi)`.
pub fn first_true<P>(pred: P, mut lo: f64, mut hi: f64, t_tol: f64) -> f64
where
    P: Fn(f64) -> bool,
{
    while hi - lo > t_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_roots_and_bad_brackets() {
        assert_eq!(bisect(|x| x, 0.0, 1.0, 1e-12, 0.0).unwrap(), 0.0);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0).is_err());
    }

    #[test]
    fn first_true_localizes_threshold() {
        let t = first_true(|t| t >= 0.3, 0.0, 1.0, 1e-9);
        assert!(t >= 0.3 && t - 0.3 <= 1e-9);
    }
}
