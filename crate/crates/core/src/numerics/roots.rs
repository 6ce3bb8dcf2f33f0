//! Bracketing root finding and golden-section minimization.

use crate::{Error, Result};

/// Bisection for a sign change of `f` on [a, b]; runs to floating-point resolution
/// unless `xtol` stops it earlier.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !(flo.signum() != fhi.signum()) || flo.is_nan() || fhi.is_nan() {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo:e}, {hi:e}]: f = {flo:e}, {fhi:e}"
        )));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= xtol {
            break;
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
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for a minimum of a unimodal `f` on [a, b].
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 4e-16);
    }

    #[test]
    fn no_bracket() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 0.0), Err(Error::NoRoot(_))));
    }

    #[test]
    fn parabola_min() {
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }
}
