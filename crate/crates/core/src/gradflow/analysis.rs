use super::{Sample, Status, Trajectory};
use crate::activation::Activation;
use crate::error::{LabError, Result};
use crate::limits::Potential;

/// Fraction of the total path length left when the terminal secant starts.
pub const DIRECTION_THRESHOLD: f64 = 1e-3;
const DIRECTION_STABILITY: f64 = 1e-2;

fn scalar_input(traj: &Trajectory, s: &Sample) -> Result<f64> {
    if s.x.len() != 1 || traj.first().theta.w.len() != 1 {
        return Err(LabError::Dimension { expected: 1, got: s.x.len() });
    }
    let x = s.x1();
    if x == 0.0 {
        return Err(LabError::InvalidInput("conservation law needs a nonzero input".into()));
    }
    Ok(x)
}

/// `max_t |a²/2 − a₀²/2 − (h(w) − h(w₀))|` over the recorded states, with
/// `h' = σ(xw)/(xσ'(xw))` anchored at `w₀`.
pub fn conserved_residual(traj: &Trajectory, s: &Sample, act: &Activation) -> Result<f64> {
    let x = scalar_input(traj, s)?;
    let first = &traj.first().theta;
    let (w0, a0) = (first.w1(), first.a);
    let (lo, hi) = traj.states.iter().fold((w0, w0), |(lo, hi), st| (lo.min(st.theta.w1()), hi.max(st.theta.w1())));
    let pot = Potential::with_span(act.clone(), x, w0, lo, hi)?;
    let mut worst = 0.0_f64;
    for st in &traj.states {
        let (w, a) = (st.theta.w1(), st.theta.a);
        let r = (0.5 * (a * a - a0 * a0) - pot.h_eval(w)?).abs();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `max_t |w − w₀ − x(a² − a₀²)/2|`: the exponential-activation
/// conservation law written without `h`.
pub fn parabola_residual(traj: &Trajectory, s: &Sample) -> Result<f64> {
    let x = scalar_input(traj, s)?;
    let first = &traj.first().theta;
    let (w0, a0) = (first.w1(), first.a);
    Ok(traj.states.iter().fold(0.0_f64, |m, st| {
        let (w, a) = (st.theta.w1(), st.theta.a);
        m.max((w - w0 - 0.5 * x * (a * a - a0 * a0)).abs())
    }))
}

fn secant_from(traj: &Trajectory, frac: f64) -> Result<Vec<f64>> {
    let limit = traj.require_limit()?.to_vec();
    let pts: Vec<Vec<f64>> = traj.states.iter().map(|s| s.theta.to_vec()).collect();
    let dist = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let mut cum = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        cum[i] = cum[i - 1] + dist(&pts[i - 1], &pts[i]);
    }
    let total = cum[pts.len() - 1] + dist(&pts[pts.len() - 1], &limit);
    if !(total > 0.0) {
        return Err(LabError::NotConverged("trajectory does not move".into()));
    }
    let i = cum.iter().position(|c| total - c < frac * total).unwrap_or(pts.len() - 1);
    let d: Vec<f64> = limit.iter().zip(&pts[i]).map(|(l, p)| l - p).collect();
    let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(LabError::UnstableDirection { angle: f64::NAN });
    }
    Ok(d.into_iter().map(|v| v / n).collect())
}

pub fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (dot / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// Unit vector estimating `lim θ̇/|θ̇|`: the normalized secant from the first
/// state whose remaining path length is below `1e-3` of the total, toward
/// the limit. Rejected when halving the threshold turns the estimate by
/// more than `1e-2` rad.
pub fn terminal_direction(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.status != Status::Converged {
        return Err(LabError::NotConverged(traj.status.to_string()));
    }
    if traj.states.len() < 10 {
        return Err(LabError::NotConverged(format!("only {} recorded states, need at least 10", traj.states.len())));
    }
    let d = secant_from(traj, DIRECTION_THRESHOLD)?;
    let d_half = secant_from(traj, 0.5 * DIRECTION_THRESHOLD)?;
    let angle = angle_between(&d, &d_half);
    if !(angle < DIRECTION_STABILITY) {
        return Err(LabError::UnstableDirection { angle });
    }
    Ok(d)
}
