use crate::error::{Error, Result};

/// Bisection on a sign change of `g` in [lo, hi].
///
/// Returns the midpoint of the final bracket (width ≤ `tol`), or the exact
/// midpoint at which `g` vanishes if bisection lands on one.
pub fn bisect_root<G: FnMut(f64) -> f64>(mut g: G, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut g_lo = g(lo);
    let g_hi = g(hi);
    if !(g_lo * g_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let x = bisect_root(|x| x - 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_two() {
        let x = bisect_root(|x| x * x - 2.0, 1.0, 2.0, 1e-12).unwrap();
        assert!((x - std::f64::consts::SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn exact_zero_returns_midpoint() {
        let x = bisect_root(|x| x, -1.0, 1.0, 1e-12).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn missing_sign_change_is_bracket_error() {
        let err = bisect_root(|x| x * x + 1.0, -1.0, 1.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn non_positive_tolerance_rejected() {
        assert!(matches!(
            bisect_root(|x| x, -1.0, 1.0, 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }
}
