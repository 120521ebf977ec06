//! Activation functions `σ`, their first two derivatives, and the reciprocal
//! `σ̃ = 1/σ` with its derivatives.
//!
//! Builtins carry closed forms. Piecewise activations glue restricted
//! builtins together with Hermite blends and isolated point redefinitions.

mod hermite;
mod piecewise;

pub use hermite::Poly;
pub use piecewise::{make_piecewise, BlendMode, Exception, PiecewiseActivation, PiecewiseSpec, Segment};

use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Exp,
    Sigmoid,
    Softplus,
    /// `e^{−z²}`; positive but not monotone.
    Gaussian,
    /// `z^q` restricted to `z > 0`.
    Power {
        q: f64,
    },
    Piecewise(Arc<PiecewiseActivation>),
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn logistic_prime(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

fn check_order(z: f64, order: u8, smoothness: u8) -> Result<()> {
    if order > smoothness || order > 2 {
        return Err(LabError::Smoothness { z, order, reason: "order exceeds the activation smoothness" });
    }
    Ok(())
}

impl Activation {
    pub fn piecewise(p: PiecewiseActivation) -> Self {
        Activation::Piecewise(Arc::new(p))
    }

    pub fn name(&self) -> String {
        match self {
            Activation::Exp => "exp".into(),
            Activation::Sigmoid => "sigmoid".into(),
            Activation::Softplus => "softplus".into(),
            Activation::Gaussian => "gaussian".into(),
            Activation::Power { q } => format!("power(q={q})"),
            Activation::Piecewise(p) => format!("piecewise({} segments)", p.segments().len()),
        }
    }

    /// Open interval on which the activation is defined and positive.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Activation::Power { .. } => (0.0, f64::INFINITY),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn smoothness(&self) -> u8 {
        match self {
            Activation::Piecewise(p) => p.smoothness(),
            _ => 2,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, Activation::Piecewise(_))
    }

    /// True for activations known to satisfy `σ > 0` and `σ' > 0` on all of
    /// ℝ. Piecewise activations are checked pointwise by their users.
    pub fn is_positive_increasing(&self) -> bool {
        matches!(self, Activation::Exp | Activation::Sigmoid | Activation::Softplus)
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !z.is_finite() || z <= lo || z >= hi {
            return Err(LabError::Domain { z });
        }
        Ok(())
    }

    /// `σ(z)`, `σ'(z)` or `σ''(z)` for `order` 0, 1, 2.
    pub fn eval(&self, z: f64, order: u8) -> Result<f64> {
        self.check_domain(z)?;
        check_order(z, order, self.smoothness())?;
        Ok(match self {
            Activation::Exp => z.exp(),
            Activation::Sigmoid => match order {
                0 => logistic(z),
                1 => logistic_prime(z),
                _ => -logistic_prime(z) * (0.5 * z).tanh(),
            },
            Activation::Softplus => match order {
                0 => z.max(0.0) + (-z.abs()).exp().ln_1p(),
                1 => logistic(z),
                _ => logistic_prime(z),
            },
            Activation::Gaussian => {
                let g = (-z * z).exp();
                match order {
                    0 => g,
                    1 => -2.0 * z * g,
                    _ => (4.0 * z * z - 2.0) * g,
                }
            }
            Activation::Power { q } => match order {
                0 => z.powf(*q),
                1 => q * z.powf(q - 1.0),
                _ => q * (q - 1.0) * z.powf(q - 2.0),
            },
            Activation::Piecewise(p) => return p.eval(z, order),
        })
    }

    /// `σ̃(z) = 1/σ(z)` and its derivatives.
    pub fn recip(&self, z: f64, order: u8) -> Result<f64> {
        self.check_domain(z)?;
        check_order(z, order, self.smoothness())?;
        Ok(match self {
            Activation::Exp => {
                let e = (-z).exp();
                if order == 1 {
                    -e
                } else {
                    e
                }
            }
            Activation::Sigmoid => {
                let e = (-z).exp();
                match order {
                    0 => 1.0 + e,
                    1 => -e,
                    _ => e,
                }
            }
            Activation::Gaussian => {
                let g = (z * z).exp();
                match order {
                    0 => g,
                    1 => 2.0 * z * g,
                    _ => (2.0 + 4.0 * z * z) * g,
                }
            }
            Activation::Power { q } => match order {
                0 => z.powf(-q),
                1 => -q * z.powf(-q - 1.0),
                _ => q * (q + 1.0) * z.powf(-q - 2.0),
            },
            Activation::Softplus | Activation::Piecewise(_) => {
                let s = self.eval(z, 0)?;
                if s == 0.0 {
                    return Err(LabError::Domain { z });
                }
                match order {
                    0 => 1.0 / s,
                    1 => -self.eval(z, 1)? / (s * s),
                    _ => {
                        let d1 = self.eval(z, 1)?;
                        let d2 = self.eval(z, 2)?;
                        (2.0 * d1 * d1 - s * d2) / (s * s * s)
                    }
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeFailure {
    pub z: f64,
    pub order: u8,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeReport {
    pub max_rel_err_1: f64,
    /// `None` when the activation is only `C¹`.
    pub max_rel_err_2: Option<f64>,
    pub failures: Vec<DerivativeFailure>,
}

/// Threshold above which a grid point is listed as a failure.
pub const DERIVATIVE_TOL: f64 = 1e-6;

/// Compares analytic derivatives with central differences of step `h`:
/// order 1 against differences of `σ`, order 2 against differences of the
/// analytic `σ'`. Errors are relative with a unit floor on the denominator.
/// Points where an evaluation fails are reported as failures with NaN.
pub fn check_derivatives(act: &Activation, grid: &[f64], h: f64) -> DerivativeReport {
    let mut report = DerivativeReport {
        max_rel_err_1: 0.0,
        max_rel_err_2: (act.smoothness() >= 2).then_some(0.0),
        failures: Vec::new(),
    };
    for &z in grid {
        for order in 1..=act.smoothness().min(2) {
            let analytic = act.eval(z, order);
            let lo = act.eval(z - h, order - 1);
            let hi = act.eval(z + h, order - 1);
            let (analytic, numeric) = match (analytic, lo, hi) {
                (Ok(a), Ok(l), Ok(u)) => (a, (u - l) / (2.0 * h)),
                _ => (f64::NAN, f64::NAN),
            };
            let rel_err = (analytic - numeric).abs() / analytic.abs().max(1.0);
            let slot = if order == 1 {
                &mut report.max_rel_err_1
            } else {
                report.max_rel_err_2.as_mut().expect("order 2 only when smooth")
            };
            if rel_err.is_nan() {
                *slot = f64::NAN;
            } else if !slot.is_nan() {
                *slot = slot.max(rel_err);
            }
            if !(rel_err <= DERIVATIVE_TOL) {
                report.failures.push(DerivativeFailure { z, order, analytic, numeric, rel_err });
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUILTINS: [Activation; 5] = [
        Activation::Exp,
        Activation::Sigmoid,
        Activation::Softplus,
        Activation::Gaussian,
        Activation::Power { q: 1.5 },
    ];

    #[test]
    fn spot_values() {
        assert_eq!(Activation::Sigmoid.eval(0.0, 0).unwrap(), 0.5);
        assert_eq!(Activation::Exp.eval(0.0, 1).unwrap(), 1.0);
        let sp = Activation::Softplus.eval(0.3, 0).unwrap();
        assert!((sp - 0.854_355_244_468_526_4).abs() < 1e-15);
        assert_eq!(Activation::Exp.recip(1.0, 0).unwrap(), (-1.0f64).exp());
        assert_eq!(Activation::Sigmoid.recip(0.0, 0).unwrap(), 2.0);
        let g = Activation::Gaussian.recip(1.0, 1).unwrap();
        assert!((g - 2.0 * std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn power_domain_is_positive_axis() {
        let p = Activation::Power { q: 2.0 };
        assert!(matches!(p.eval(0.0, 0), Err(LabError::Domain { .. })));
        assert!(matches!(p.recip(-1.0, 0), Err(LabError::Domain { .. })));
        assert_eq!(p.eval(3.0, 0).unwrap(), 9.0);
    }

    #[test]
    fn orders_above_two_rejected() {
        assert!(matches!(Activation::Exp.eval(0.0, 3), Err(LabError::Smoothness { .. })));
    }

    #[test]
    fn reciprocal_identity_on_grid() {
        for act in &BUILTINS {
            let (lo, hi) = match act {
                Activation::Power { .. } => (0.01, 10.0),
                _ => (-10.0, 10.0),
            };
            for i in 0..1000 {
                let z = lo + (hi - lo) * i as f64 / 999.0;
                let prod = act.eval(z, 0).unwrap() * act.recip(z, 0).unwrap();
                assert!((prod - 1.0).abs() < 1e-12, "{act:?} at {z}: {prod}");
            }
        }
    }

    #[test]
    fn reciprocal_derivatives_match_quotient_rule() {
        for act in &BUILTINS {
            for &z in &[0.2, 0.7, 1.3, 2.0] {
                let s = act.eval(z, 0).unwrap();
                let d1 = act.eval(z, 1).unwrap();
                let d2 = act.eval(z, 2).unwrap();
                let r1 = -d1 / (s * s);
                let r2 = (2.0 * d1 * d1 - s * d2) / (s * s * s);
                let e1 = (act.recip(z, 1).unwrap() - r1).abs() / r1.abs().max(1.0);
                let e2 = (act.recip(z, 2).unwrap() - r2).abs() / r2.abs().max(1.0);
                assert!(e1 < 1e-13 && e2 < 1e-13, "{act:?} at {z}");
            }
        }
    }

    #[test]
    fn derivative_check_builtins() {
        let grid: Vec<f64> = (0..=60).map(|i| -3.0 + 0.1 * i as f64).collect();
        for act in &BUILTINS[..4] {
            let r = check_derivatives(act, &grid, 1e-5);
            assert!(r.failures.is_empty(), "{act:?}: {:?}", r.failures.first());
        }
        let r = check_derivatives(&Activation::Exp, &[-1.0, 0.0, 1.0], 1e-5);
        assert!(r.max_rel_err_1 < 1e-6 && r.max_rel_err_2.unwrap() < 1e-6);
    }

    #[test]
    fn monotone_builtins_have_positive_slope() {
        for act in &BUILTINS[..3] {
            for i in 0..1000 {
                let z = -10.0 + 20.0 * i as f64 / 999.0;
                assert!(act.eval(z, 1).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        for act in &BUILTINS {
            let s = serde_json::to_string(act).unwrap();
            let back: Activation = serde_json::from_str(&s).unwrap();
            assert_eq!(&back, act);
        }
        assert_eq!(serde_json::to_string(&Activation::Power { q: 2.0 }).unwrap(), r#"{"kind":"power","q":2.0}"#);
    }
}
