//! Scalar root finding on a bracket.

use crate::error::{Error, Result};

/// Plain bisection on `[lo, hi]` until the bracket is narrower than `xtol`.
///
/// `f(lo)` and `f(hi)` must have opposite signs (a zero at either end is
/// returned directly).
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || flo.is_nan() || fhi.is_nan() {
        return Err(Error::domain(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo:.3e}, {fhi:.3e})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::numeric("bisection iteration limit", hi - lo))
}

/// Bisection down to `coarse_tol`, then Newton polish kept inside the
/// surviving bracket. Falls back to a bisection step whenever a Newton step
/// leaves the bracket or the derivative vanishes.
///
/// `fdf` returns the value and the derivative.
pub fn bracketed_newton<F>(
    fdf: F,
    lo: f64,
    hi: f64,
    coarse_tol: f64,
    fine_tol: f64,
    max_iter: usize,
) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let f = |x: f64| fdf(x).0;
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() && flo != 0.0 && fhi != 0.0 {
        return Err(Error::domain(format!(
            "no sign change on [{lo}, {hi}]: f = ({flo:.3e}, {fhi:.3e})"
        )));
    }
    let increasing = flo < fhi;

    // coarse bracket
    let mut a = lo;
    let mut b = hi;
    while b - a > coarse_tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == increasing {
            a = m;
        } else {
            b = m;
        }
    }

    let mut x = 0.5 * (a + b);
    let mut last_step = f64::INFINITY;
    for _ in 0..max_iter {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == increasing {
            a = x;
        } else {
            b = x;
        }
        let mut next = if dfx != 0.0 && dfx.is_finite() {
            x - fx / dfx
        } else {
            f64::NAN
        };
        if !(next > a && next < b) {
            next = 0.5 * (a + b);
        }
        let step = (next - x).abs();
        x = next;
        if step <= fine_tol * x.abs().max(1.0) || (step == 0.0 && last_step == 0.0) {
            return Ok(x);
        }
        if b - a <= fine_tol * x.abs().max(1.0) {
            return Ok(x);
        }
        last_step = step;
    }
    Err(Error::numeric("Newton polish did not converge", fdf(x).0.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-10, 100).is_err());
    }

    #[test]
    fn newton_polish_reaches_machine_precision() {
        let r = bracketed_newton(|x| (x.cos() - x, -x.sin() - 1.0), 0.0, 1.0, 1e-6, 1e-15, 50)
            .unwrap();
        assert!((r.cos() - r).abs() < 1e-15);
    }

    #[test]
    fn newton_handles_decreasing_functions() {
        let r = bracketed_newton(|x| (1.0 - x * x * x, -3.0 * x * x), 0.0, 3.0, 1e-6, 1e-15, 50)
            .unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }
}
