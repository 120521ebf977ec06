use super::{grad_into, GFConfig, Params, Sample, State, Status, Trajectory};
use crate::activation::Activation;
use crate::error::{LabError, Result};
use crate::numeric::ode::DormandPrince;
use crate::numeric::sup_norm;

/// Integrates `θ̇ = −∇L` from `theta0`.
///
/// Stops with `Converged` once the gradient sup-norm is below `grad_tol`
/// (or the rounding floor of the gradient, if larger) and the loss has
/// plateaued, `Diverged` when `‖θ‖_∞ > diverge_norm`, and
/// `MaxTime` at `t_max` or after `max_steps` step attempts. The converged
/// limit is the final state followed by one Gauss–Newton projection onto the
/// zero set of the residual, kept only when it is tiny and reduces `|r|`.
/// Forward steps are additionally capped at `1/|∇r|²`.
pub fn integrate(theta0: &Params, s: &Sample, act: &Activation, cfg: &GFConfig) -> Result<Trajectory> {
    run(theta0, s, act, cfg, -1.0)
}

/// Integrates the reverse-time flow `θ̇ = +∇L`. There is no convergence
/// test: the run ends `Diverged` once `‖θ‖_∞ > diverge_norm` and `MaxTime`
/// otherwise. `limit` is always `None`.
pub fn integrate_reverse(theta0: &Params, s: &Sample, act: &Activation, cfg: &GFConfig) -> Result<Trajectory> {
    run(theta0, s, act, cfg, 1.0)
}

fn run(theta0: &Params, s: &Sample, act: &Activation, cfg: &GFConfig, sign: f64) -> Result<Trajectory> {
    cfg.validate(theta0)?;
    if theta0.w.len() != s.x.len() {
        return Err(LabError::Dimension { expected: theta0.w.len(), got: s.x.len() });
    }
    if act.smoothness() < 1 {
        return Err(LabError::Smoothness { z: f64::NAN, order: 1, reason: "gradient flow needs a C¹ activation" });
    }
    let dim = theta0.dim();
    let m = dim - 1;
    let forward = sign < 0.0;
    let mut rhs = |y: &[f64], dy: &mut [f64]| -> Result<()> {
        grad_into(&y[..m], y[m], s, act, dy)?;
        dy.iter_mut().for_each(|v| *v *= sign);
        Ok(())
    };

    let mut g = vec![0.0; dim];
    let mut state_at = |t: f64, y: &[f64]| -> Result<State> {
        let r = grad_into(&y[..m], y[m], s, act, &mut g)?;
        Ok(State { t, theta: Params::from_slice(y), loss: r * r, grad_norm: sup_norm(&g) })
    };

    let mut y = theta0.to_vec();
    let mut t = 0.0;
    let mut states = vec![state_at(t, &y)?];
    if forward && states[0].grad_norm < cfg.grad_tol {
        return Ok(Trajectory { states, status: Status::Converged, limit: Some(theta0.clone()) });
    }

    let mut dp = DormandPrince::new(dim, cfg.abs_tol, cfg.rel_tol);
    let mut h = dp.initial_step(&mut rhs, &y, cfg.t_max)?;
    if forward {
        h = h.min(stability_cap(&y, s, act));
    }
    let mut attempts = 0usize;
    let status = loop {
        if attempts >= cfg.max_steps {
            break Status::MaxTime;
        }
        attempts += 1;
        h = h.min(cfg.t_max - t);
        match dp.attempt(&mut rhs, &y, h) {
            Err(LabError::Domain { .. } | LabError::Smoothness { .. }) => h *= 0.25,
            Err(e) => return Err(e),
            Ok(err) if err <= 1.0 => {
                let disp = y.iter().zip(dp.y_new()).fold(0.0_f64, |d, (p, q)| d.max((p - q).abs()));
                if disp > cfg.max_record_step {
                    h *= 0.9 * cfg.max_record_step / disp;
                } else {
                    t += h;
                    y.copy_from_slice(dp.y_new());
                    dp.accept(err);
                    h = dp.propose(h, err, true);
                    if forward {
                        h = h.min(stability_cap(&y, s, act));
                    }
                    let st = state_at(t, &y)?;
                    let grad_norm = st.grad_norm;
                    states.push(st);
                    if !y.iter().all(|v| v.is_finite()) || sup_norm(&y) > cfg.diverge_norm {
                        break Status::Diverged;
                    }
                    let tol = cfg.grad_tol.max(gradient_floor(&y, s, act));
                    if forward && grad_norm < tol && plateaued(&states, cfg) {
                        break Status::Converged;
                    }
                    if t >= cfg.t_max {
                        break Status::MaxTime;
                    }
                }
            }
            Ok(err) => h = dp.propose(h, err, false),
        }
        if !(h > 0.0) || t + h == t {
            return Err(LabError::StepFailure { t, theta: y });
        }
    };

    let limit = (status == Status::Converged).then(|| polish(&states.last().unwrap().theta, s, act));
    Ok(Trajectory { states, status, limit })
}

/// Near the minima set the Hessian of `L` is `2∇r∇rᵀ`; keeping
/// `h·2|∇r|² ≤ 2` holds the explicit stepper inside its real stability
/// interval with strong damping, so integration noise decays instead of
/// settling at the tolerance level.
fn stability_cap(y: &[f64], s: &Sample, act: &Activation) -> f64 {
    let m = y.len() - 1;
    let z: f64 = s.x.iter().zip(&y[..m]).map(|(x, w)| x * w).sum();
    let (Ok(sig), Ok(dsig)) = (act.eval(z, 0), act.eval(z, 1)) else {
        return f64::INFINITY;
    };
    let x2: f64 = s.x.iter().map(|x| x * x).sum();
    let n2 = sig * sig + y[m] * y[m] * dsig * dsig * x2;
    if n2 > 0.0 {
        1.0 / n2
    } else {
        f64::INFINITY
    }
}

/// Gradient produced by a residual at rounding level: `r` cannot be resolved
/// below `4ε(|aσ| + |y| + Σ|∂r/∂θᵢ||θᵢ|)`, the last term being the effect
/// of rounding `θ` itself. Large outputs or steep activations can push the
/// resulting `2|r||∇r|_∞` above `grad_tol`, which would otherwise never be
/// met.
fn gradient_floor(y: &[f64], s: &Sample, act: &Activation) -> f64 {
    let m = y.len() - 1;
    let z: f64 = s.x.iter().zip(&y[..m]).map(|(x, w)| x * w).sum();
    let (Ok(sig), Ok(dsig)) = (act.eval(z, 0), act.eval(z, 1)) else {
        return 0.0;
    };
    let a = y[m];
    // |aσ| enters once as part of r and once as |∂r/∂a|·|a|.
    let mut spread = 2.0 * (a * sig).abs() + s.y.abs();
    let mut dr = sig.abs();
    for (x, w) in s.x.iter().zip(&y[..m]) {
        let d = (a * x * dsig).abs();
        spread += d * w.abs();
        dr = dr.max(d);
    }
    2.0 * 4.0 * f64::EPSILON * spread * dr
}

fn plateaued(states: &[State], cfg: &GFConfig) -> bool {
    let n = states.len();
    let back = cfg.plateau_steps.min(n - 1);
    states[n - 1 - back].loss - states[n - 1].loss < cfg.plateau_tol
}

fn polish(theta: &Params, s: &Sample, act: &Activation) -> Params {
    let attempt = || -> Result<Option<Params>> {
        let z = s.pre_activation(theta);
        let sig = act.eval(z, 0)?;
        let r = theta.a * sig - s.y;
        if r == 0.0 {
            return Ok(None);
        }
        let dsig = if s.is_zero_input() { 0.0 } else { act.eval(z, 1)? };
        let mut n: Vec<f64> = s.x.iter().map(|x| theta.a * x * dsig).collect();
        n.push(sig);
        let nn: f64 = n.iter().map(|v| v * v).sum();
        if !(nn > 0.0) {
            return Ok(None);
        }
        let step: Vec<f64> = n.iter().map(|v| -r * v / nn).collect();
        if sup_norm(&step) >= 1e-6 {
            return Ok(None);
        }
        let v: Vec<f64> = theta.to_vec().iter().zip(&step).map(|(p, d)| p + d).collect();
        let cand = Params::from_slice(&v);
        let r2 = cand.a * act.eval(s.pre_activation(&cand), 0)? - s.y;
        Ok((r2.abs() < r.abs()).then_some(cand))
    };
    attempt().ok().flatten().unwrap_or_else(|| theta.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradflow::loss;

    #[test]
    fn exp_flow_reaches_constructed_target() {
        // Target (2, 3) from (1, 1): x = 2(w*−w0)/(a*²−a0²), y = a*·e^{x w*}.
        let x = 0.25;
        let s = Sample::scalar(x, 3.0 * (x * 2.0f64).exp());
        let tr = integrate(&Params::scalar(1.0, 1.0), &s, &Activation::Exp, &GFConfig::default()).unwrap();
        assert_eq!(tr.status, Status::Converged);
        let lim = tr.limit.unwrap();
        assert!(lim.dist_sup(&Params::scalar(2.0, 3.0)) < 1e-6, "{lim:?}");
    }

    #[test]
    fn equilibrium_start_converges_immediately() {
        let s = Sample::scalar(1.0, 2.0);
        let th = Params::scalar(0.0, 2.0);
        let tr = integrate(&th, &s, &Activation::Exp, &GFConfig::default()).unwrap();
        assert_eq!(tr.status, Status::Converged);
        assert_eq!(tr.states.len(), 1);
        assert_eq!(tr.limit.unwrap(), th);
    }

    #[test]
    fn recorded_states_are_dense_and_loss_monotone() {
        let s = Sample::scalar(1.0, 1.0);
        let cfg = GFConfig::default();
        let tr = integrate(&Params::scalar(0.922, 2.868), &s, &Activation::Sigmoid, &cfg).unwrap();
        for w in tr.states.windows(2) {
            assert!(w[1].t > w[0].t);
            assert!(w[0].theta.dist_sup(&w[1].theta) < cfg.max_record_step);
            assert!(w[1].loss <= w[0].loss + 10.0 * cfg.abs_tol);
        }
        let lim = tr.limit.unwrap();
        assert!(loss(&lim, &s, &Activation::Sigmoid).unwrap() < 1e-20);
    }

    #[test]
    fn zero_input_moves_only_a() {
        let s = Sample::scalar(0.0, -0.5);
        let tr = integrate(&Params::scalar(0.3, 1.0), &s, &Activation::Softplus, &GFConfig::default()).unwrap();
        let lim = tr.limit.unwrap();
        assert_eq!(lim.w, vec![0.3]);
        assert!((lim.a + 0.5 / 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn diverging_reverse_flow() {
        let s = Sample::scalar(1.0, 1.0);
        let cfg = GFConfig { diverge_norm: 10.0, ..GFConfig::default() };
        let tr = integrate_reverse(&Params::scalar(0.5, 1.0), &s, &Activation::Sigmoid, &cfg).unwrap();
        assert_eq!(tr.status, Status::Diverged);
        assert!(tr.limit.is_none());
    }

    #[test]
    fn max_time_is_reported() {
        let s = Sample::scalar(1.0, 1.0);
        let cfg = GFConfig { t_max: 0.01, ..GFConfig::default() };
        let tr = integrate(&Params::scalar(0.0, 0.0), &s, &Activation::Sigmoid, &cfg).unwrap();
        assert_eq!(tr.status, Status::MaxTime);
        assert!(tr.limit.is_none());
    }
}
