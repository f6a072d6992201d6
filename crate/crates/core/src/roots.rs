//! Bracketing root finders shared by the threshold solvers.

/// Bisects `f` on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs,
/// stopping when the bracket is narrower than `tol(mid)`.
pub fn bisect<F, T>(f: F, mut lo: f64, mut hi: f64, tol: T) -> f64
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= tol(mid) {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Samples `f` on a geometric grid from `lo` to `hi` and returns every
/// adjacent pair of grid points across which `f` changes sign.
pub fn sign_changes_geometric<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    points_per_decade: usize,
) -> Vec<(f64, f64)> {
    let decades = (hi / lo).log10();
    let n = ((decades * points_per_decade as f64).ceil() as usize).max(1);
    let ratio = (hi / lo).powf(1.0 / n as f64);
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for k in 1..=n {
        let x1 = if k == n { hi } else { lo * ratio.powi(k as i32) };
        let f1 = f(x1);
        if (f0 > 0.0) != (f1 > 0.0) {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Illinois variant of regula falsi on a sign-changing bracket; converges
/// superlinearly for smooth `f`. Stops when the bracket is narrower than `tol(x)`.
pub fn illinois<F, T>(f: F, mut a: f64, mut b: f64, tol: T) -> f64
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    let mut side = 0i8;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        if !c.is_finite() || (b - a).abs() <= tol(c) {
            return if c.is_finite() { c } else { 0.5 * (a + b) };
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= tol(c) {
            return c;
        }
    }
    0.5 * (a + b)
}
