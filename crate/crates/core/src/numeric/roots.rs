//! Bracketed scalar root finding.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RootError {
    /// `f(lo)` and `f(hi)` have the same sign.
    NotBracketed { lo: f64, hi: f64 },
    /// The function returned a non-finite value.
    NonFinite { x: f64 },
}

/// Bisection until the bracket is narrower than `x_tol` (or cannot shrink
/// further in floating point) or `|f| <= f_tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, f_tol: f64) -> Result<Root, RootError> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let fb = f(b);
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(Root { x: a, fx: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { lo: a, hi: b });
    }
    let mut iterations = 0;
    loop {
        let m = 0.5 * (a + b);
        let fm = f(m);
        iterations += 1;
        if !fm.is_finite() {
            return Err(RootError::NonFinite { x: m });
        }
        if fm.abs() <= f_tol || fm == 0.0 || (b - a) <= x_tol || m <= a || m >= b {
            return Ok(Root { x: m, fx: fm, iterations });
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
}

/// Brent's method (inverse quadratic interpolation with bisection fallback).
pub fn brent<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> Result<Root, RootError> {
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() {
        return Err(RootError::NonFinite { x: a });
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite { x: b });
    }
    if fa == 0.0 {
        return Ok(Root { x: a, fx: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, fx: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { lo, hi });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= f_tol {
            return Ok(Root { x: b, fx: fb, iterations: iter });
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = d;
            }
        } else {
            d = m;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(RootError::NonFinite { x: b });
        }
    }
    Ok(Root { x: b, fx: fb, iterations: max_iter })
}

/// Grows the symmetric bracket `[center − r, center + r]` by doubling `r`
/// until the function changes sign across it. Returns `(lo, hi)`.
pub fn expand_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    center: f64,
    initial_radius: f64,
    max_radius: f64,
) -> Result<(f64, f64), RootError> {
    let mut r = initial_radius;
    loop {
        let lo = center - r;
        let hi = center + r;
        let flo = f(lo);
        let fhi = f(hi);
        if flo.is_finite() && fhi.is_finite() && flo.signum() != fhi.signum() {
            return Ok((lo, hi));
        }
        if flo == 0.0 || fhi == 0.0 {
            return Ok((lo, hi));
        }
        if r >= max_radius {
            return Err(RootError::NotBracketed { lo, hi });
        }
        r *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r.x - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn brent_matches_bisection() {
        let f = |x: f64| x.cos() - x;
        let b = brent(f, 0.0, 1.0, 1e-15, 0.0, 100).unwrap();
        let c = bisect(f, 0.0, 1.0, 1e-15, 0.0).unwrap();
        assert!((b.x - c.x).abs() < 1e-14);
        assert!(b.iterations < c.iterations);
    }

    #[test]
    fn unbracketed_is_reported() {
        assert_eq!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0), Err(RootError::NotBracketed { lo: -1.0, hi: 1.0 }));
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 0.0, 50).is_err());
    }

    #[test]
    fn bracket_expansion_doubles() {
        let (lo, hi) = expand_bracket(|x| x - 37.0, 0.0, 1.0, 1e4).unwrap();
        assert_eq!((lo, hi), (-64.0, 64.0));
        assert!(expand_bracket(|x| x * x + 1.0, 0.0, 1.0, 100.0).is_err());
    }
}
