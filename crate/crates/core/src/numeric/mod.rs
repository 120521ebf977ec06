//! Numerical building blocks: quadrature, bracketed root finding, an
//! embedded Runge–Kutta stepper and a few floating-point helpers.

pub mod ode;
pub mod quadrature;
pub mod roots;

/// `a·b − c·d` with one rounding error instead of two (Kahan's algorithm).
pub fn diff_of_products(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let cd = c * d;
    let err = (-c).mul_add(d, cd);
    let dop = a.mul_add(b, -cd);
    dop + err
}

/// Radical-inverse (van der Corput) value of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Two-dimensional Halton point with bases 2 and 3.
pub fn halton2(index: u64) -> (f64, f64) {
    (radical_inverse(index, 2), radical_inverse(index, 3))
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_first_points() {
        assert_eq!(halton2(1), (0.5, 1.0 / 3.0));
        assert_eq!(halton2(2), (0.25, 2.0 / 3.0));
        assert_eq!(radical_inverse(3, 2), 0.75);
    }

    #[test]
    fn diff_of_products_recovers_cancellation() {
        let a = 1.0 + f64::EPSILON;
        let naive = a * a - 1.0 * (1.0 + 2.0 * f64::EPSILON);
        let exact = f64::EPSILON * f64::EPSILON;
        assert_eq!(diff_of_products(a, a, 1.0, 1.0 + 2.0 * f64::EPSILON), exact);
        assert_eq!(naive, 0.0);
    }
}
