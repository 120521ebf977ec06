//! Gradient flow `θ̇ = −∇L` of the one-sample squared loss
//! `L(θ) = (a·σ(xᵀw) − y)²`.

mod analysis;
mod flow;

pub use analysis::{angle_between, conserved_residual, parabola_residual, terminal_direction, DIRECTION_THRESHOLD};
pub use flow::{integrate, integrate_reverse};

use crate::activation::Activation;
use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// `θ = (w, a)` with `w ∈ ℝ^{M−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub w: Vec<f64>,
    pub a: f64,
}

impl Params {
    pub fn new(w: Vec<f64>, a: f64) -> Self {
        Params { w, a }
    }

    /// `M = 2` parameters.
    pub fn scalar(w: f64, a: f64) -> Self {
        Params { w: vec![w], a }
    }

    /// Number of parameters `M`.
    pub fn dim(&self) -> usize {
        self.w.len() + 1
    }

    /// Scalar `w` of an `M = 2` parameter.
    pub fn w1(&self) -> f64 {
        self.w[0]
    }

    /// `[w_1, …, w_{M−1}, a]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.w.clone();
        v.push(self.a);
        v
    }

    pub fn from_slice(v: &[f64]) -> Self {
        let (a, w) = v.split_last().expect("non-empty parameter vector");
        Params { w: w.to_vec(), a: *a }
    }

    pub fn dist_sup(&self, other: &Params) -> f64 {
        self.w.iter().zip(&other.w).map(|(p, q)| (p - q).abs()).fold((self.a - other.a).abs(), f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.w.iter().all(|v| v.is_finite())
    }
}

/// One training sample `S = (x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Sample { x, y }
    }

    pub fn scalar(x: f64, y: f64) -> Self {
        Sample { x: vec![x], y }
    }

    pub fn x1(&self) -> f64 {
        self.x[0]
    }

    /// `xᵀw`.
    pub fn pre_activation(&self, theta: &Params) -> f64 {
        self.x.iter().zip(&theta.w).map(|(x, w)| x * w).sum()
    }

    pub fn is_zero_input(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0)
    }
}

fn check_dims(theta: &Params, s: &Sample) -> Result<()> {
    if theta.w.len() != s.x.len() {
        return Err(LabError::Dimension { expected: theta.w.len(), got: s.x.len() });
    }
    if theta.w.is_empty() {
        return Err(LabError::Dimension { expected: 1, got: 0 });
    }
    Ok(())
}

/// Residual `r = a·σ(xᵀw) − y`.
pub fn residual(theta: &Params, s: &Sample, act: &Activation) -> Result<f64> {
    check_dims(theta, s)?;
    Ok(theta.a * act.eval(s.pre_activation(theta), 0)? - s.y)
}

pub fn loss(theta: &Params, s: &Sample, act: &Activation) -> Result<f64> {
    let r = residual(theta, s, act)?;
    Ok(r * r)
}

/// `∇L` ordered as `[∂/∂w_1, …, ∂/∂w_{M−1}, ∂/∂a]`.
pub fn grad(theta: &Params, s: &Sample, act: &Activation) -> Result<Vec<f64>> {
    check_dims(theta, s)?;
    let mut g = vec![0.0; theta.dim()];
    grad_into(&theta.w, theta.a, s, act, &mut g)?;
    Ok(g)
}

pub(crate) fn grad_into(w: &[f64], a: f64, s: &Sample, act: &Activation, out: &mut [f64]) -> Result<f64> {
    let z: f64 = s.x.iter().zip(w).map(|(x, w)| x * w).sum();
    let sig = act.eval(z, 0)?;
    let r = a * sig - s.y;
    let dsig = if s.is_zero_input() { 0.0 } else { act.eval(z, 1)? };
    let m = w.len();
    for i in 0..m {
        out[i] = 2.0 * r * a * s.x[i] * dsig;
    }
    out[m] = 2.0 * r * sig;
    Ok(r)
}

/// Integrator and stopping configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GFConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Convergence: sup-norm of the gradient below this.
    pub grad_tol: f64,
    /// Loss threshold for limit membership checks.
    pub loss_tol: f64,
    pub t_max: f64,
    /// Abort when `‖θ‖_∞` exceeds this.
    pub diverge_norm: f64,
    /// Largest sup-norm change between consecutive recorded states.
    pub max_record_step: f64,
    /// Step attempts before giving up with `MaxTime`.
    pub max_steps: usize,
    /// Plateau window: loss decrease over this many accepted steps must be
    /// below `plateau_tol` to declare convergence.
    pub plateau_steps: usize,
    pub plateau_tol: f64,
}

impl Default for GFConfig {
    fn default() -> Self {
        GFConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            grad_tol: 1e-8,
            loss_tol: 1e-10,
            t_max: 1e7,
            diverge_norm: 1e6,
            max_record_step: 0.05,
            max_steps: 2_000_000,
            plateau_steps: 10,
            plateau_tol: 1e-14,
        }
    }
}

impl GFConfig {
    pub fn validate(&self, theta0: &Params) -> Result<()> {
        let positive = [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("grad_tol", self.grad_tol),
            ("loss_tol", self.loss_tol),
            ("t_max", self.t_max),
            ("diverge_norm", self.diverge_norm),
            ("max_record_step", self.max_record_step),
            ("plateau_tol", self.plateau_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(LabError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grad_tol >= 1.0 || self.loss_tol >= 1.0 {
            return Err(LabError::InvalidInput("grad_tol and loss_tol must be below 1".into()));
        }
        let norm = crate::numeric::sup_norm(&theta0.to_vec());
        if !theta0.is_finite() || self.diverge_norm <= norm {
            return Err(LabError::InvalidInput(format!(
                "diverge_norm {} must exceed the initial norm {norm}",
                self.diverge_norm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Converged,
    MaxTime,
    Diverged,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Status::Converged => "Converged",
            Status::MaxTime => "MaxTime",
            Status::Diverged => "Diverged",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub t: f64,
    pub theta: Params,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub status: Status,
    /// Present iff `status` is `Converged`.
    pub limit: Option<Params>,
}

impl Trajectory {
    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectories hold at least one state")
    }

    pub fn require_limit(&self) -> Result<&Params> {
        self.limit.as_ref().ok_or_else(|| LabError::NotConverged(self.status.to_string()))
    }

    /// CSV with header `t,w_1..w_{M-1},a,loss,grad_norm`; numbers use the
    /// shortest representation that reads back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let m1 = self.first().theta.w.len();
        let mut out = String::from("t");
        for i in 1..=m1 {
            let _ = write!(out, ",w_{i}");
        }
        out.push_str(",a,loss,grad_norm\n");
        for st in &self.states {
            let _ = write!(out, "{:?}", st.t);
            for w in &st.theta.w {
                let _ = write!(out, ",{w:?}");
            }
            let _ = writeln!(out, ",{:?},{:?},{:?}", st.theta.a, st.loss, st.grad_norm);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }

    /// Pre-activation values `xᵀw` visited by the recorded states.
    pub fn pre_activation_range(&self, s: &Sample) -> (f64, f64) {
        self.states.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), st| {
            let z = s.pre_activation(&st.theta);
            (lo.min(z), hi.max(z))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_and_grad_by_hand() {
        let th = Params::scalar(0.0, 1.0);
        let s = Sample::scalar(1.0, 0.0);
        assert_eq!(loss(&th, &s, &Activation::Exp).unwrap(), 1.0);
        assert_eq!(grad(&th, &s, &Activation::Exp).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn fig2_start_loss() {
        let sp = Activation::Softplus;
        let s03 = sp.eval(0.3, 0).unwrap();
        let l = loss(&Params::scalar(0.3, 1.0), &Sample::scalar(1.0, -s03), &sp).unwrap();
        assert!((l - 4.0 * s03 * s03).abs() < 1e-15);
    }

    #[test]
    fn gradient_vanishes_on_minima_curve() {
        let act = Activation::Sigmoid;
        let s = Sample::scalar(1.3, 0.7);
        let w = 0.4;
        let th = Params::scalar(w, s.y * act.recip(1.3 * w, 0).unwrap());
        let g = grad(&th, &s, &act).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn dimension_mismatch() {
        let r = loss(&Params::new(vec![1.0, 2.0], 1.0), &Sample::scalar(1.0, 0.0), &Activation::Exp);
        assert!(matches!(r, Err(LabError::Dimension { .. })));
    }

    #[test]
    fn config_validation() {
        let th = Params::scalar(1.0, 1.0);
        assert!(GFConfig::default().validate(&th).is_ok());
        let cfg = GFConfig { diverge_norm: 0.5, ..GFConfig::default() };
        assert!(cfg.validate(&th).is_err());
        let cfg = GFConfig { grad_tol: 2.0, ..GFConfig::default() };
        assert!(cfg.validate(&th).is_err());
    }

    #[test]
    fn csv_header_and_round_trip_numbers() {
        let traj = Trajectory {
            states: vec![State { t: 0.0, theta: Params::scalar(0.1, 1.0 / 3.0), loss: 1e-300, grad_norm: 2.5 }],
            status: Status::Converged,
            limit: Some(Params::scalar(0.1, 1.0 / 3.0)),
        };
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,w_1,a,loss,grad_norm");
        let fields: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields, vec![0.0, 0.1, 1.0 / 3.0, 1e-300, 2.5]);
    }
}
