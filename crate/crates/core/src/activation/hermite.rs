//! Hermite polynomial pieces used to bridge gaps between segments.

use serde::{Deserialize, Serialize};

/// Polynomial `Σ c_k (z − z0)^k` on `[z0, z1]`, degree at most five.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub z0: f64,
    pub z1: f64,
    pub coeffs: [f64; 6],
}

impl Poly {
    pub fn eval(&self, z: f64, order: u8) -> f64 {
        let t = z - self.z0;
        let c = &self.coeffs;
        match order {
            0 => c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5])))),
            1 => c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5]))),
            _ => 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5])),
        }
    }

    /// Cubic matching value and slope at both ends.
    pub fn cubic(z0: f64, z1: f64, v0: f64, v1: f64, d0: f64, d1: f64) -> Self {
        let h = z1 - z0;
        let delta = (v1 - v0) / h;
        Poly {
            z0,
            z1,
            coeffs: [v0, d0, (3.0 * delta - 2.0 * d0 - d1) / h, (d0 + d1 - 2.0 * delta) / (h * h), 0.0, 0.0],
        }
    }

    /// Quintic matching value, slope and curvature at both ends.
    pub fn quintic(z0: f64, z1: f64, v: [f64; 2], d: [f64; 2], s: [f64; 2]) -> Self {
        let h = z1 - z0;
        let (c0, c1, c2) = (v[0], d[0], 0.5 * s[0]);
        let r0 = v[1] - (c0 + c1 * h + c2 * h * h);
        let r1 = (d[1] - (c1 + 2.0 * c2 * h)) * h;
        let r2 = (s[1] - 2.0 * c2) * h * h;
        let a = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let b = -15.0 * r0 + 7.0 * r1 - r2;
        let c = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        Poly { z0, z1, coeffs: [c0, c1, c2, a / h.powi(3), b / h.powi(4), c / h.powi(5)] }
    }
}

/// Fritsch–Carlson region: a cubic Hermite interpolant with normalized end
/// slopes `α = d0/Δ`, `β = d1/Δ` is monotone iff this holds.
pub fn fritsch_carlson(alpha: f64, beta: f64) -> bool {
    if alpha < 0.0 || beta < 0.0 {
        return false;
    }
    let s = alpha + beta - 2.0;
    if s <= 0.0 || 2.0 * alpha + beta - 3.0 <= 0.0 || alpha + 2.0 * beta - 3.0 <= 0.0 {
        return true;
    }
    alpha - (2.0 * alpha + beta - 3.0).powi(2) / (3.0 * s) >= 0.0
}

/// Monotone non-decreasing `C¹` bridge from `(z0, v0, d0)` to `(z1, v1, d1)`
/// with `v1 > v0`, `d0, d1 ≥ 0`. A single cubic when the data permits it,
/// otherwise cubic–linear–cubic with the cubic secants chosen so that every
/// piece has normalized end slopes in `[0, 1]`.
pub fn monotone_c1(z0: f64, z1: f64, v0: f64, v1: f64, d0: f64, d1: f64) -> Vec<Poly> {
    let g = z1 - z0;
    let dv = v1 - v0;
    let delta = dv / g;
    if fritsch_carlson(d0 / delta, d1 / delta) {
        return vec![Poly::cubic(z0, z1, v0, v1, d0, d1)];
    }
    let w0 = (0.25 * g).min(if d0 > 0.0 { 0.25 * dv / d0 } else { f64::INFINITY });
    let w1 = (0.25 * g).min(if d1 > 0.0 { 0.25 * dv / d1 } else { f64::INFINITY });
    let mid = g - w0 - w1;
    // Solve mu·mid + max(d0, mu)·w0 + max(d1, mu)·w1 = dv; the left side is
    // increasing in mu and negative-residual at mu = 0.
    let resid = |mu: f64| mu * mid + d0.max(mu) * w0 + d1.max(mu) * w1 - dv;
    let mut lo = 0.0;
    let mut hi = dv / mid;
    while resid(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if resid(m) < 0.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let mu = 0.5 * (lo + hi);
    let za = z0 + w0;
    let zb = z1 - w1;
    let va = v0 + d0.max(mu) * w0;
    let vb = v1 - d1.max(mu) * w1;
    let slope = (vb - va) / (zb - za);
    vec![
        Poly::cubic(z0, za, v0, va, d0, slope),
        Poly::cubic(za, zb, va, vb, slope, slope),
        Poly::cubic(zb, z1, vb, v1, slope, d1),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_and_quintic_match_end_data() {
        let c = Poly::cubic(-1.0, 2.0, 0.5, 4.0, 0.3, 2.0);
        assert!((c.eval(-1.0, 0) - 0.5).abs() < 1e-15);
        assert!((c.eval(2.0, 0) - 4.0).abs() < 1e-14);
        assert!((c.eval(-1.0, 1) - 0.3).abs() < 1e-15);
        assert!((c.eval(2.0, 1) - 2.0).abs() < 1e-14);
        let q = Poly::quintic(0.5, 1.5, [1.0, 3.0], [0.2, 4.0], [-1.0, 6.0]);
        for (z, v, d, s) in [(0.5, 1.0, 0.2, -1.0), (1.5, 3.0, 4.0, 6.0)] {
            assert!((q.eval(z, 0) - v).abs() < 1e-13);
            assert!((q.eval(z, 1) - d).abs() < 1e-12);
            assert!((q.eval(z, 2) - s).abs() < 1e-11);
        }
    }

    #[test]
    fn fritsch_carlson_region() {
        assert!(fritsch_carlson(1.0, 1.0));
        assert!(fritsch_carlson(3.0, 0.0));
        assert!(!fritsch_carlson(10.0, 10.0));
        assert!(!fritsch_carlson(-0.1, 1.0));
    }

    #[test]
    fn steep_ends_give_three_monotone_pieces() {
        let pieces = monotone_c1(0.0, 1.0, 0.0, 1.0, 40.0, 25.0);
        assert_eq!(pieces.len(), 3);
        for w in pieces.windows(2) {
            assert_eq!(w[0].z1, w[1].z0);
            assert!((w[0].eval(w[0].z1, 0) - w[1].eval(w[1].z0, 0)).abs() < 1e-14);
            assert!((w[0].eval(w[0].z1, 1) - w[1].eval(w[1].z0, 1)).abs() < 1e-12);
        }
        let last = pieces.last().unwrap();
        assert!((last.eval(1.0, 0) - 1.0).abs() < 1e-14);
        assert!((last.eval(1.0, 1) - 25.0).abs() < 1e-10);
        for p in &pieces {
            for i in 0..=200 {
                let z = p.z0 + (p.z1 - p.z0) * i as f64 / 200.0;
                assert!(p.eval(z, 1) >= -1e-12, "slope {} at {z}", p.eval(z, 1));
            }
        }
    }
}
