use crate::activation::Activation;
use crate::error::{LabError, Result};
use crate::gradflow::{integrate, terminal_direction, GFConfig, Params, Sample};
use serde::{Deserialize, Serialize};

/// Minimum line angle (radians) for two arrival directions to count as
/// independent.
pub const ANGLE_THRESHOLD: f64 = 1e-3;
const SLOPE_MATCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OnePointDegeneracy {
    /// Two of the samples are identical.
    RepeatedSample,
    /// The closed-form slopes coincide across inputs, as for a monomial
    /// activation.
    PowerDegenerate,
    /// Directions coincide for another reason.
    Collinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnePointReport {
    pub theta0: Params,
    pub samples: Vec<Sample>,
    pub limits: Vec<Params>,
    /// `(w₀, −a₀)`.
    pub common_limit: Params,
    pub max_limit_error: f64,
    /// Estimated unit arrival directions, one per sample.
    pub directions: Vec<Vec<f64>>,
    /// Closed-form `da/dw` at the limit; `None` for `x = 0`.
    pub formula_slopes: Vec<Option<f64>>,
    /// Smallest angle between the lines spanned by two directions.
    pub min_pairwise_angle: f64,
    pub degenerate: Option<OnePointDegeneracy>,
}

/// `[(x_i, −a₀·σ(x_i·w₀))]`: each flow from `θ₀` ends at `(w₀, −a₀)`.
pub fn one_point_samples(theta0: &Params, xs: &[f64], act: &Activation) -> Result<Vec<Sample>> {
    if theta0.w.len() != 1 {
        return Err(LabError::Dimension { expected: 1, got: theta0.w.len() });
    }
    if theta0.a == 0.0 {
        return Err(LabError::ZeroOutputWeight);
    }
    xs.iter().map(|&x| Ok(Sample::scalar(x, -theta0.a * act.eval(x * theta0.w1(), 0)?))).collect()
}

/// Slope `da/dw = −σ(xw₀)/(a₀xσ'(xw₀))` of the arrival direction at
/// `(w₀, −a₀)`.
pub fn limiting_direction_formula(theta0: &Params, x: f64, act: &Activation) -> Result<f64> {
    if theta0.a == 0.0 {
        return Err(LabError::ZeroOutputWeight);
    }
    if x == 0.0 {
        return Err(LabError::InvalidInput("slope formula needs x ≠ 0".into()));
    }
    let z = x * theta0.w1();
    let ds = act.eval(z, 1)?;
    if ds == 0.0 {
        return Err(LabError::DerivativeZero { z });
    }
    Ok(-act.eval(z, 0)? / (theta0.a * x * ds))
}

/// Angle in `[0, π/2]` between the lines spanned by `u` and `v`.
pub fn line_angle(u: &[f64], v: &[f64]) -> f64 {
    let a = crate::gradflow::angle_between(u, v);
    a.min(std::f64::consts::PI - a)
}

/// Integrates every flow, requires each limit within `tol` of `(w₀, −a₀)`,
/// and measures how independent the arrival directions are.
pub fn verify_one_point(
    theta0: &Params,
    samples: &[Sample],
    act: &Activation,
    tol: f64,
    cfg: &GFConfig,
) -> Result<OnePointReport> {
    if samples.len() < 2 {
        return Err(LabError::InvalidInput("one-point verification needs at least two samples".into()));
    }
    if theta0.w.len() != 1 {
        return Err(LabError::Dimension { expected: 1, got: theta0.w.len() });
    }
    let common = Params::new(theta0.w.clone(), -theta0.a);
    let mut limits = Vec::new();
    let mut directions = Vec::new();
    let mut max_err = 0.0_f64;
    for (i, s) in samples.iter().enumerate() {
        let tr = integrate(theta0, s, act, cfg)?;
        let Some(limit) = tr.limit.clone() else {
            return Err(LabError::NonConvergence { index: i + 1, status: tr.status.to_string() });
        };
        let distance = limit.dist_sup(&common);
        if !(distance < tol) {
            return Err(LabError::LimitMismatch { index: i + 1, distance });
        }
        max_err = max_err.max(distance);
        directions.push(terminal_direction(&tr)?);
        limits.push(limit);
    }
    let formula_slopes: Vec<Option<f64>> = samples
        .iter()
        .map(|s| if s.x1() == 0.0 { None } else { limiting_direction_formula(theta0, s.x1(), act).ok() })
        .collect();
    let mut min_angle = f64::INFINITY;
    let mut worst = (0, 1);
    for i in 0..directions.len() {
        for j in i + 1..directions.len() {
            let a = line_angle(&directions[i], &directions[j]);
            if a < min_angle {
                min_angle = a;
                worst = (i, j);
            }
        }
    }
    let degenerate = (min_angle < ANGLE_THRESHOLD).then(|| {
        let (i, j) = worst;
        if samples[i] == samples[j] {
            OnePointDegeneracy::RepeatedSample
        } else {
            match (formula_slopes[i], formula_slopes[j]) {
                (Some(p), Some(q)) if (p - q).abs() <= SLOPE_MATCH * p.abs().max(q.abs()) => {
                    OnePointDegeneracy::PowerDegenerate
                }
                _ => OnePointDegeneracy::Collinear,
            }
        }
    });
    Ok(OnePointReport {
        theta0: theta0.clone(),
        samples: samples.to_vec(),
        limits,
        common_limit: common,
        max_limit_error: max_err,
        directions,
        formula_slopes,
        min_pairwise_angle: min_angle,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_and_slopes() {
        let act = Activation::Softplus;
        let th = Params::scalar(0.3, 1.0);
        let ss = one_point_samples(&th, &[0.6, 1.0, 1.4, 1.8], &act).unwrap();
        assert_eq!(ss[1], Sample::scalar(1.0, -act.eval(0.3, 0).unwrap()));
        let m = limiting_direction_formula(&th, 1.0, &act).unwrap();
        let oracle = -(1.0 + 0.3f64.exp()).ln() * (1.0 + (-0.3f64).exp());
        assert!((m - oracle).abs() < 1e-14, "{m}");
        assert!((m + 1.4874).abs() < 2e-4);
        let e = limiting_direction_formula(&Params::scalar(0.7, 2.0), 1.5, &Activation::Exp).unwrap();
        assert!((e + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(one_point_samples(&Params::scalar(0.3, 0.0), &[1.0], &act), Err(LabError::ZeroOutputWeight));
    }

    #[test]
    fn line_angle_ignores_orientation() {
        assert!(line_angle(&[1.0, 0.0], &[-1.0, 0.0]) < 1e-15);
        assert!((line_angle(&[1.0, 0.0], &[0.0, 1.0]) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }
}
