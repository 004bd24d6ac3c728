//! Bracketed root refinement.

/// Bisects a sign change of `f` on `[lo, hi]` until the bracket is no wider
/// than `width`. Returns the final bracket, or `None` if the endpoints do
/// not straddle a sign change.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, width: f64) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Some((lo, lo));
    }
    if f_hi == 0.0 {
        return Some((hi, hi));
    }
    if f_lo.signum() == f_hi.signum() || !f_lo.is_finite() || !f_hi.is_finite() {
        return None;
    }
    // 200 halvings exhaust any f64 bracket.
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some((mid, mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}
