use crate::error::{LabError, Result};
use crate::gradflow::{Params, Sample};

/// Sample `S = (x, y)` whose exponential-activation flow from `theta0`
/// converges to `theta_star`.
///
/// The flow conserves `w − x·a²/2`, so it moves on the parabola
/// `w = w₀ + x(a² − a₀²)/2`; requiring it to pass through `θ*` and `θ*` to
/// be a global minimum gives `x = 2(w* − w₀)/(a*² − a₀²)` and
/// `y = a*·e^{xᵀw*}`. When `a* = −a₀` the parabola degenerates: only
/// `w* = w₀` is reachable, with `x = 0`, `y = a*`.
pub fn recipe_a_sample(theta0: &Params, theta_star: &Params) -> Result<Sample> {
    if theta0.w.len() != theta_star.w.len() {
        return Err(LabError::Dimension { expected: theta0.w.len(), got: theta_star.w.len() });
    }
    if !theta0.is_finite() || !theta_star.is_finite() {
        return Err(LabError::InvalidInput("non-finite parameters".into()));
    }
    let (a0, a) = (theta0.a, theta_star.a);
    if a == a0 {
        return Err(LabError::EqualOutputWeights);
    }
    let da2 = a * a - a0 * a0;
    if da2 == 0.0 {
        if theta_star.w != theta0.w {
            return Err(LabError::UnreachableTarget("a* = −a₀ leaves w fixed, but w* differs from w₀".into()));
        }
        return Ok(Sample::new(vec![0.0; theta0.w.len()], a));
    }
    let x: Vec<f64> = theta_star.w.iter().zip(&theta0.w).map(|(ws, w0)| 2.0 * (ws - w0) / da2).collect();
    let z: f64 = x.iter().zip(&theta_star.w).map(|(x, w)| x * w).sum();
    Ok(Sample::new(x, a * z.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_examples() {
        let s = recipe_a_sample(&Params::scalar(1.0, 1.0), &Params::scalar(2.0, 3.0)).unwrap();
        assert_eq!(s.x, vec![0.25]);
        assert!((s.y - 3.0 * 0.5f64.exp()).abs() < 1e-15);
        let s = recipe_a_sample(&Params::scalar(1.0, 1.0), &Params::scalar(1.0, -1.0)).unwrap();
        assert_eq!(s, Sample::scalar(0.0, -1.0));
        let s = recipe_a_sample(&Params::scalar(1.0, 2.0), &Params::scalar(3.0, 4.0)).unwrap();
        assert!((s.x[0] - 1.0 / 3.0).abs() < 1e-16);
        assert!((s.y - 4.0 * 1f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_targets() {
        let th = Params::scalar(1.0, 1.0);
        assert_eq!(recipe_a_sample(&th, &Params::scalar(5.0, 1.0)), Err(LabError::EqualOutputWeights));
        assert!(matches!(recipe_a_sample(&th, &Params::scalar(2.0, -1.0)), Err(LabError::UnreachableTarget(_))));
    }
}
