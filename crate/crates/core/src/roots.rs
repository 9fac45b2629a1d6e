//! Scalar root finding: stable quadratics and bracketed bisection.

use crate::error::{Error, Result};

/// Real roots of a·x² + b·x + c = 0 in ascending order, computed without
/// the cancellation of the textbook formula. `None` when the discriminant
/// is negative. A zero leading coefficient falls back to the linear root.
pub fn quadratic(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a == 0.0 {
        if b == 0.0 {
            return None;
        }
        let x = -c / b;
        return Some((x, x));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    quadratic_with_disc(a, b, c, disc)
}

/// As [`quadratic`] with a caller-supplied discriminant, for callers that
/// can factor it more accurately than b² − 4ac.
pub fn quadratic_with_disc(a: f64, b: f64, c: f64, disc: f64) -> Option<(f64, f64)> {
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let qv = -0.5 * (b + b.signum() * sq);
    if qv == 0.0 {
        // b = 0 and disc = 0, or b = 0 with c = 0
        let x = (-c / a).max(0.0).sqrt();
        return Some((-x, x));
    }
    let (x1, x2) = (qv / a, c / qv);
    Some(if x1 <= x2 { (x1, x2) } else { (x2, x1) })
}

/// Bisection on [lo, hi] until the bracket is narrower than `xtol`.
/// `f(lo)` and `f(hi)` must differ in sign (a zero endpoint is returned).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.signum() != f_hi.signum()) || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Scans `n` equal steps on [lo, hi] and bisects the first sign change.
pub fn first_crossing<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, n: usize, xtol: f64) -> Result<f64> {
    let n = n.max(1);
    let h = (hi - lo) / n as f64;
    let mut x0 = lo;
    let mut f0 = f(lo);
    if f0 == 0.0 {
        return Ok(lo);
    }
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + h * i as f64 };
        let f1 = f(x1);
        if f1 == 0.0 || f1.signum() != f0.signum() {
            return bisect(&mut f, x0, x1, xtol);
        }
        x0 = x1;
        f0 = f1;
    }
    Err(Error::NoSignChange {
        lo,
        hi,
        f_lo: f(lo),
        f_hi: f0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quadratic_basic() {
        assert_eq!(quadratic(1.0, -3.0, 2.0), Some((1.0, 2.0)));
        assert_eq!(quadratic(1.0, 0.0, 1.0), None);
        assert_eq!(quadratic(0.0, 2.0, -4.0), Some((2.0, 2.0)));
        assert_eq!(quadratic(1.0, 0.0, -4.0), Some((-2.0, 2.0)));
        assert_eq!(quadratic(1.0, 0.0, 0.0), Some((0.0, 0.0)));
    }

    #[test]
    fn quadratic_small_root_is_accurate() {
        let (x1, x2) = quadratic(1.0, -1e8, 1.0).unwrap();
        assert!((x1 - 1e-8).abs() < 1e-22);
        assert!((x2 - 1e8).abs() < 1e-6);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn first_crossing_picks_leftmost() {
        let r = first_crossing(|x: f64| (x * 10.0).sin(), 0.1, 1.0, 100, 1e-13).unwrap();
        assert!((r - std::f64::consts::PI / 10.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn quadratic_roots_are_zeros(r1 in -10.0f64..10.0, r2 in -10.0f64..10.0, a in 0.1f64..5.0) {
            prop_assume!((r1 - r2).abs() > 1e-3);
            let (b, c) = (-a * (r1 + r2), a * r1 * r2);
            let (x1, x2) = quadratic(a, b, c).unwrap();
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            prop_assert!((x1 - lo).abs() < 1e-6 * (1.0 + lo.abs()));
            prop_assert!((x2 - hi).abs() < 1e-6 * (1.0 + hi.abs()));
        }
    }
}
