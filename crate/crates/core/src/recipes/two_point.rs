use crate::activation::Activation;
use crate::error::{LabError, Result};
use crate::gradflow::{integrate, loss, GFConfig, Params, Sample, Trajectory};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoPointReport {
    pub theta0: Params,
    pub s1: Sample,
    pub s2: Sample,
    pub limit1: Params,
    pub limit2: Params,
    /// `(L(limit1, S₁), L(limit2, S₂))`.
    pub self_losses: (f64, f64),
    /// `(L(limit1, S₂), L(limit2, S₁))`, evaluated at the points named in
    /// `cross_points`.
    pub cross_losses: (f64, f64),
    /// Points at which membership was checked: the integrated limits, or
    /// exact targets when certifying a constructed instance.
    pub cross_points: (Params, Params),
    pub separation: f64,
    pub tol: f64,
    pub sep_min: f64,
    pub verdict: bool,
}

fn run_flow(index: usize, theta0: &Params, s: &Sample, act: &Activation, cfg: &GFConfig) -> Result<Trajectory> {
    let tr = integrate(theta0, s, act, cfg)?;
    if tr.limit.is_none() {
        return Err(LabError::NonConvergence { index, status: tr.status.to_string() });
    }
    Ok(tr)
}

/// Integrates both flows from `theta0` and checks that each limit lies on
/// its own and on the other sample's minima curve, and that the limits are
/// more than `sep_min` apart.
pub fn verify_two_point(
    theta0: &Params,
    s1: &Sample,
    s2: &Sample,
    act: &Activation,
    tol: f64,
    sep_min: f64,
    cfg: &GFConfig,
) -> Result<TwoPointReport> {
    let (report, _, _) = verify_with_flows(theta0, s1, s2, act, tol, sep_min, cfg)?;
    Ok(report)
}

pub(crate) fn verify_with_flows(
    theta0: &Params,
    s1: &Sample,
    s2: &Sample,
    act: &Activation,
    tol: f64,
    sep_min: f64,
    cfg: &GFConfig,
) -> Result<(TwoPointReport, Trajectory, Trajectory)> {
    let t1 = run_flow(1, theta0, s1, act, cfg)?;
    let t2 = run_flow(2, theta0, s2, act, cfg)?;
    let l1 = t1.limit.clone().unwrap();
    let l2 = t2.limit.clone().unwrap();
    let report = build(theta0, s1, s2, act, l1.clone(), l2.clone(), (l1, l2), tol, sep_min)?;
    Ok((report, t1, t2))
}

/// Two-point check for constructed instances whose activation is redefined
/// at isolated points: the integrated limits must lie within `limit_tol` of
/// the intended `targets`, and the memberships are checked at the targets
/// themselves, where the redefinitions apply exactly.
#[allow(clippy::too_many_arguments)]
pub fn certify_two_point(
    theta0: &Params,
    s1: &Sample,
    s2: &Sample,
    act: &Activation,
    targets: (&Params, &Params),
    limit_tol: f64,
    tol: f64,
    sep_min: f64,
    cfg: &GFConfig,
) -> Result<TwoPointReport> {
    let t1 = run_flow(1, theta0, s1, act, cfg)?;
    let t2 = run_flow(2, theta0, s2, act, cfg)?;
    let l1 = t1.limit.unwrap();
    let l2 = t2.limit.unwrap();
    for (index, (l, t)) in [(&l1, targets.0), (&l2, targets.1)].into_iter().enumerate() {
        let distance = l.dist_sup(t);
        if !(distance < limit_tol) {
            return Err(LabError::LimitMismatch { index: index + 1, distance });
        }
    }
    build(theta0, s1, s2, act, l1, l2, (targets.0.clone(), targets.1.clone()), tol, sep_min)
}

#[allow(clippy::too_many_arguments)]
fn build(
    theta0: &Params,
    s1: &Sample,
    s2: &Sample,
    act: &Activation,
    limit1: Params,
    limit2: Params,
    cross_points: (Params, Params),
    tol: f64,
    sep_min: f64,
) -> Result<TwoPointReport> {
    let self_losses = (loss(&limit1, s1, act)?, loss(&limit2, s2, act)?);
    let cross_losses = (loss(&cross_points.0, s2, act)?, loss(&cross_points.1, s1, act)?);
    let separation = limit1.dist_sup(&limit2);
    let verdict = self_losses.0 < tol
        && self_losses.1 < tol
        && cross_losses.0 < tol
        && cross_losses.1 < tol
        && separation > sep_min;
    Ok(TwoPointReport {
        theta0: theta0.clone(),
        s1: s1.clone(),
        s2: s2.clone(),
        limit1,
        limit2,
        self_losses,
        cross_losses,
        cross_points,
        separation,
        tol,
        sep_min,
        verdict,
    })
}
