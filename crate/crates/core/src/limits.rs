//! Limit prediction without integrating the flow.
//!
//! Along the flow for `M = 2` and `x ≠ 0`, `a ȧ = ẇ σ(xw)/(xσ'(xw))`, so
//! `a²/2 − h(w)` is conserved for any antiderivative `h` of
//! `σ(xw)/(xσ'(xw))`. Writing `w` in terms of `a` reduces the limit to the
//! unique zero of `φ(s) = s·σ(x·h⁻¹(h(w₀) + s²/2 − a₀²/2)) − y`.

use crate::activation::Activation;
use crate::error::{LabError, Result};
use crate::gradflow::{Params, Sample};
use crate::numeric::quadrature;
use crate::numeric::roots::{self, RootError};
use std::cell::RefCell;

const NODE_SPACING: f64 = 0.25;
const QUAD_TOL: f64 = 1e-13;
const MAX_INTERVALS: usize = 4000;
const MAX_RADIUS: f64 = 1e6;
const PHI_MAX_RADIUS: f64 = 1e4;

/// Monotone potential `h` with `h(w_ref) = 0`, cached on a table of
/// quadrature nodes.
#[derive(Debug, Clone)]
pub struct Potential {
    act: Activation,
    x: f64,
    w_ref: f64,
    nodes: Vec<(f64, f64)>,
}

pub fn check_supported(act: &Activation) -> Result<()> {
    match act {
        Activation::Exp | Activation::Sigmoid | Activation::Softplus | Activation::Piecewise(_) => Ok(()),
        other => Err(LabError::UnsupportedActivation(format!(
            "{} is not positive and increasing on the real line",
            other.name()
        ))),
    }
}

impl Potential {
    pub fn new(act: Activation, x: f64, w_ref: f64) -> Result<Self> {
        Self::with_span(act, x, w_ref, w_ref, w_ref)
    }

    /// Builds the node table over `[lo, hi] ∪ {w_ref}`.
    pub fn with_span(act: Activation, x: f64, w_ref: f64, lo: f64, hi: f64) -> Result<Self> {
        check_supported(&act)?;
        if !(x != 0.0 && x.is_finite()) {
            return Err(LabError::InvalidInput(format!("potential needs a finite nonzero input, got {x}")));
        }
        if !w_ref.is_finite() || !lo.is_finite() || !hi.is_finite() {
            return Err(LabError::InvalidInput("non-finite potential span".into()));
        }
        let mut pot = Potential { act, x, w_ref, nodes: vec![(w_ref, 0.0)] };
        let steps_up = ((hi.max(w_ref) - w_ref) / NODE_SPACING).ceil() as usize;
        let steps_down = ((w_ref - lo.min(w_ref)) / NODE_SPACING).ceil() as usize;
        let mut up = Vec::with_capacity(steps_up);
        let (mut w, mut h) = (w_ref, 0.0);
        for k in 1..=steps_up {
            let next = w_ref + k as f64 * NODE_SPACING;
            h += pot.integral(w, next)?;
            w = next;
            up.push((w, h));
        }
        let mut down = Vec::with_capacity(steps_down);
        let (mut w, mut h) = (w_ref, 0.0);
        for k in 1..=steps_down {
            let next = w_ref - k as f64 * NODE_SPACING;
            h += pot.integral(w, next)?;
            w = next;
            down.push((w, h));
        }
        down.reverse();
        down.push((w_ref, 0.0));
        down.extend(up);
        pot.nodes = down;
        Ok(pot)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn w_ref(&self) -> f64 {
        self.w_ref
    }

    /// Cached `(w, h(w))` nodes, increasing in `w`.
    pub fn table(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// `h'(w) = σ(xw)/(xσ'(xw))`.
    pub fn integrand(&self, w: f64) -> Result<f64> {
        let z = self.x * w;
        let s = self.act.eval(z, 0)?;
        let ds = self.act.eval(z, 1)?;
        if !(s > 0.0 && ds > 0.0) {
            return Err(LabError::UnsupportedActivation(format!(
                "σ = {s}, σ' = {ds} at {z}; the potential needs both positive"
            )));
        }
        Ok(s / (self.x * ds))
    }

    fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        if self.act == Activation::Exp {
            return Ok((b - a) / self.x);
        }
        let mut failure = None;
        let res = quadrature::integrate(
            |u| match self.integrand(u) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            a,
            b,
            QUAD_TOL,
            QUAD_TOL,
            MAX_INTERVALS,
        );
        match failure {
            Some(e) => Err(e),
            None if res.value.is_finite() => Ok(res.value),
            None => Err(LabError::Range { value: res.value }),
        }
    }

    pub fn h_eval(&self, w: f64) -> Result<f64> {
        if !w.is_finite() {
            return Err(LabError::Range { value: w });
        }
        if self.act == Activation::Exp {
            return Ok((w - self.w_ref) / self.x);
        }
        let i = self.nodes.partition_point(|&(nw, _)| nw <= w);
        let k = match i {
            0 => 0,
            i if i == self.nodes.len() => i - 1,
            i if w - self.nodes[i - 1].0 <= self.nodes[i].0 - w => i - 1,
            i => i,
        };
        let (nw, nh) = self.nodes[k];
        Ok(nh + self.integral(nw, w)?)
    }

    /// `w` with `h(w) = v`, by bracket expansion from `w_ref` and Brent's
    /// method run to floating-point resolution.
    pub fn h_inverse(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(LabError::Range { value: v });
        }
        if v == 0.0 {
            return Ok(self.w_ref);
        }
        if self.act == Activation::Exp {
            return Ok(self.w_ref + v * self.x);
        }
        let dir = v.signum() * self.x.signum();
        let mut inner = self.w_ref;
        let mut r = 0.5;
        let outer = loop {
            let cand = self.w_ref + dir * r;
            let hv = self.h_eval(cand)?;
            if (hv - v) * v.signum() >= 0.0 {
                break cand;
            }
            inner = cand;
            r *= 2.0;
            if r > MAX_RADIUS {
                return Err(LabError::Range { value: v });
            }
        };
        let mut failure = None;
        let root = roots::brent(
            |w| match self.h_eval(w) {
                Ok(h) => h - v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            inner,
            outer,
            4.0 * f64::EPSILON * outer.abs().max(inner.abs()).max(1.0),
            0.0,
            300,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        root.map(|r| r.x).map_err(|_| LabError::Range { value: v })
    }
}

/// `φ(s) = s·σ(x·h⁻¹(h(w₀) + s²/2 − a₀²/2)) − y` for scalar `x`.
pub fn phi(pot: &Potential, theta0: &Params, s: &Sample, sval: f64) -> Result<f64> {
    if s.x.len() != 1 || theta0.w.len() != 1 {
        return Err(LabError::Dimension { expected: 1, got: s.x.len() });
    }
    if s.x1() != pot.x {
        return Err(LabError::InvalidInput("potential built for a different input".into()));
    }
    let (w0, a0) = (theta0.w1(), theta0.a);
    let h0 = if w0 == pot.w_ref { 0.0 } else { pot.h_eval(w0)? };
    let w = pot.h_inverse(h0 + 0.5 * (sval * sval - a0 * a0))?;
    Ok(sval * pot.act.eval(pot.x * w, 0)? - s.y)
}

/// The gradient-flow limit from `theta0` under `s`, via the zero of `φ`.
///
/// For `x = 0` only `a` moves and the limit is `(w₀, y/σ(0))`. For `M > 2`
/// the flow moves `w` along `x` only, so the scalar problem is solved for
/// the component of `w` along `x/|x|`.
pub fn predict_limit(theta0: &Params, s: &Sample, act: &Activation) -> Result<Params> {
    check_supported(act)?;
    if theta0.w.len() != s.x.len() {
        return Err(LabError::Dimension { expected: theta0.w.len(), got: s.x.len() });
    }
    if s.is_zero_input() {
        let s0 = act.eval(0.0, 0)?;
        return Ok(Params::new(theta0.w.clone(), s.y / s0));
    }
    if s.x.len() == 1 {
        let (w, a) = scalar_limit(act, s.x1(), theta0.w1(), theta0.a, s.y)?;
        return Ok(Params::scalar(w, a));
    }
    let norm = s.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let u: Vec<f64> = s.x.iter().map(|v| v / norm).collect();
    let w0s: f64 = u.iter().zip(&theta0.w).map(|(p, q)| p * q).sum();
    let (ws, a) = scalar_limit(act, norm, w0s, theta0.a, s.y)?;
    let w = theta0.w.iter().zip(&u).map(|(w, u)| w + (ws - w0s) * u).collect();
    Ok(Params::new(w, a))
}

fn scalar_limit(act: &Activation, x: f64, w0: f64, a0: f64, y: f64) -> Result<(f64, f64)> {
    let pot = Potential::new(act.clone(), x, w0)?;
    let theta0 = Params::scalar(w0, a0);
    let s = Sample::scalar(x, y);
    let failure = RefCell::new(None);
    let mut f = |sv: f64| match phi(&pot, &theta0, &s, sv) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let r0 = a0.abs() + 1.0;
    let bracket = roots::expand_bracket(&mut f, 0.0, r0, PHI_MAX_RADIUS);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let (lo, hi) = bracket.map_err(|e| match e {
        RootError::NotBracketed { lo, hi } => LabError::BracketFailure { lo, hi },
        RootError::NonFinite { x } => LabError::Range { value: x },
    })?;
    let root = roots::bisect(&mut f, lo, hi, 1e-13, 0.0);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let a_star = root.map_err(|_| LabError::BracketFailure { lo, hi })?.x;
    let w_star = pot.h_inverse(0.5 * (a_star * a_star - a0 * a0))?;
    Ok((w_star, a_star))
}
