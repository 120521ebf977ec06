//! One function per experiment. Each writes its artifacts and returns the
//! checks that decide the verdict.

use crate::config::{Command, ConfigError, ExperimentConfig};
use crate::output::Output;
use crate::summary::{Check, Summary};
use crate::svg::{render_svg, Curve, Style};
use overlap_core::gradflow::{conserved_residual, integrate, loss, parabola_residual, Trajectory};
use overlap_core::limits::{check_supported, predict_limit};
use overlap_core::minima::{curve_intersections, minima_curve, nondegeneracy, Verdict};
use overlap_core::recipes::{
    one_point_samples, recipe_a_sample, recipe_b_run, replay_recipe_b, trace_back_search, verify_one_point,
    verify_two_point,
};
use overlap_core::{Activation, GFConfig, LabError, Params, Sample, Status};
use serde::Serialize;
use std::io;
use std::path::Path;
use thiserror::Error;

/// Loss below which a point counts as a global minimum of its sample.
pub const MINIMUM_TOL: f64 = 1e-10;
pub const CONSERVATION_TOL: f64 = 1e-6;
pub const PARABOLA_TOL: f64 = 1e-8;
pub const ANGLE_MIN: f64 = 1e-2;

pub const FIG1_THETA0: (f64, f64) = (0.922, 2.868);
pub const FIG1_SAMPLES: [(f64, f64); 2] = [(1.0, 1.0), (12.307, 1.4)];
pub const FIG2_THETA0: (f64, f64) = (0.3, 1.0);
pub const FIG2_XS: [f64; 4] = [0.6, 1.0, 1.4, 1.8];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

pub(crate) enum Failure {
    Run(RunError),
    Lab(LabError),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::InvalidInput(m) | LabError::UnsupportedActivation(m) => {
                Failure::Run(RunError::Config(ConfigError::Invalid(m)))
            }
            LabError::Dimension { expected, got } => Failure::Run(RunError::Config(ConfigError::Invalid(format!(
                "expected dimension {expected}, got {got}"
            )))),
            e => Failure::Lab(e),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Run(e.into())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Run(e.into())
    }
}

pub(crate) type Checks = Result<Vec<Check>, Failure>;

/// Runs the configured command into `out_dir` and writes `summary.json`
/// there. Numerical failures become failing checks; configuration and I/O
/// problems are returned as errors.
pub fn execute(command: Command, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Summary, RunError> {
    cfg.validate()?;
    let mut out = Output::new(out_dir);
    let checks = run_checks(command, cfg, &mut out)?;
    let summary = Summary::new(command.name(), checks, out.into_files());
    let mut top = Output::new(out_dir);
    top.write("summary.json", &summary.to_json())?;
    Ok(summary)
}

pub(crate) fn run_checks(command: Command, cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<Check>, RunError> {
    let res = match command {
        Command::Simulate => simulate(cfg, out),
        Command::Minima => minima(cfg, out),
        Command::Intersect => intersect(cfg, out),
        Command::PredictLimit => predict(cfg, out),
        Command::RecipeA => recipe_a(cfg, out),
        Command::RecipeB => recipe_b(cfg, out),
        Command::OnePoint => {
            let th = cfg.theta0()?.clone();
            if cfg.xs.is_empty() {
                return Err(ConfigError::Missing("xs").into());
            }
            one_point(&th, &cfg.xs, &cfg.activation, cfg.tol, cfg, out)
        }
        Command::TwoPoint => {
            let ss = cfg.samples(2)?;
            two_point(cfg.theta0()?, &ss[0], &ss[1], &cfg.activation, cfg.tol, cfg.sep_min, cfg, out)
        }
        Command::Criterion => criterion(cfg, out),
        Command::Fig1 => fig1(cfg, out),
        Command::Fig2 => fig2(cfg, out),
        Command::Suite => crate::suite::suite(cfg, out),
    };
    match res {
        Ok(c) => Ok(c),
        Err(Failure::Run(e)) => Err(e),
        Err(Failure::Lab(e)) => Ok(vec![Check::flag("run", false).with_detail(e.to_string())]),
    }
}

pub(crate) fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn path_points(tr: &Trajectory) -> Vec<(f64, f64)> {
    tr.states.iter().map(|s| (s.theta.w1(), s.theta.a)).collect()
}

/// `w` window around the trajectories, padded by a quarter of their span.
fn plot_window(trs: &[&Trajectory], cfg: &ExperimentConfig) -> ((f64, f64), (f64, f64)) {
    let (mut w0, mut w1, mut a0, mut a1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (w, a) in trs.iter().flat_map(|t| path_points(t)) {
        w0 = w0.min(w);
        w1 = w1.max(w);
        a0 = a0.min(a);
        a1 = a1.max(a);
    }
    let pad = (0.25 * (w1 - w0)).max(0.25);
    let apad = (a1 - a0).max(1.0);
    (cfg.w_range.unwrap_or((w0 - pad, w1 + pad)), (a0 - apad, a1 + apad))
}

/// Writes `trajectory_i.csv`, `minima_i.csv` and `portrait.svg`.
fn write_portrait(
    trs: &[(&Sample, &Trajectory)],
    act: &Activation,
    cfg: &ExperimentConfig,
    title: &str,
    out: &mut Output,
) -> Result<(), Failure> {
    let only: Vec<&Trajectory> = trs.iter().map(|(_, t)| *t).collect();
    let (w_range, (a_lo, a_hi)) = plot_window(&only, cfg);
    let mut dashed = Vec::new();
    let mut solid = Vec::new();
    for (i, (s, tr)) in trs.iter().enumerate() {
        let i = i + 1;
        out.write(&format!("trajectory_{i}.csv"), &tr.to_csv())?;
        let curve = minima_curve(s, act, w_range, cfg.grid)?;
        out.write(&format!("minima_{i}.csv"), &curve.to_csv())?;
        dashed.push(Curve::new(format!("trajectory {i}"), path_points(tr), Style::Dashed));
        let pts = curve.points().into_iter().filter(|&(_, a)| a >= a_lo && a <= a_hi).collect();
        solid.push(Curve::new(format!("minima {i}"), pts, Style::Solid));
    }
    dashed.extend(solid);
    if let Ok(svg) = render_svg(&dashed, title) {
        out.write("portrait.svg", &svg)?;
    }
    Ok(())
}

fn run_flow(theta0: &Params, s: &Sample, act: &Activation, gf: &GFConfig) -> Result<Trajectory, Failure> {
    Ok(integrate(theta0, s, act, gf)?)
}

fn converged(name: &str, tr: &Trajectory) -> Check {
    Check::flag(name, tr.status == Status::Converged).with_detail(tr.status.to_string())
}

fn simulate(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let th = cfg.theta0()?;
    let s = &cfg.samples(1)?[0];
    let act = &cfg.activation;
    let tr = run_flow(th, s, act, &cfg.gf)?;
    out.write("trajectory.json", &tr.to_json())?;
    let mut checks = vec![converged("converged", &tr)];
    if let Some(l) = &tr.limit {
        checks.push(Check::below("limit_loss", loss(l, s, act)?, MINIMUM_TOL));
    }
    if th.dim() == 2 && !s.is_zero_input() && check_supported(act).is_ok() {
        checks.push(Check::below("conserved_residual", conserved_residual(&tr, s, act)?, CONSERVATION_TOL));
        if *act == Activation::Exp {
            checks.push(Check::below("parabola_residual", parabola_residual(&tr, s)?, PARABOLA_TOL));
        }
    }
    if th.dim() == 2 {
        write_portrait(&[(s, &tr)], act, cfg, "gradient flow", out)?;
    } else {
        out.write("trajectory_1.csv", &tr.to_csv())?;
    }
    Ok(checks)
}

fn minima(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    if cfg.samples.is_empty() {
        return Err(ConfigError::Missing("samples").into());
    }
    let range = cfg.w_range.unwrap_or((-3.0, 3.0));
    let mut curves = Vec::new();
    let mut checks = Vec::new();
    for (i, s) in cfg.samples.iter().enumerate() {
        let c = minima_curve(s, &cfg.activation, range, cfg.grid)?;
        out.write(&format!("minima_{}.csv", i + 1), &c.to_csv())?;
        let pts = c.points();
        checks.push(
            Check::above(format!("curve_{}_points", i + 1), pts.len() as f64, 1.0)
                .with_detail(format!("{} poles", c.poles.len())),
        );
        curves.push(Curve::new(format!("minima {}", i + 1), pts, Style::Solid));
    }
    if let Ok(svg) = render_svg(&curves, "minima curves") {
        out.write("minima.svg", &svg)?;
    }
    Ok(checks)
}

fn intersect(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let ss = cfg.samples(2)?;
    let r = curve_intersections(&ss[0], &ss[1], &cfg.activation, cfg.w_range.unwrap_or((-3.0, 3.0)), cfg.grid)?;
    out.write("intersections.json", &json(&r))?;
    let n = r.points.len() as f64;
    Ok(vec![Check::above("intersections", n, 0.0).with_detail(if r.all_coincident {
        "curves coincide".to_string()
    } else {
        format!("{n} crossing(s)")
    })])
}

#[derive(Serialize)]
struct Prediction<'a> {
    theta0: &'a Params,
    sample: &'a Sample,
    predicted: Params,
    integrated: Option<Params>,
    gap: f64,
}

fn predict(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let th = cfg.theta0()?;
    let s = &cfg.samples(1)?[0];
    let act = &cfg.activation;
    let pred = predict_limit(th, s, act)?;
    let tr = run_flow(th, s, act, &cfg.gf)?;
    let gap = tr.limit.as_ref().map_or(f64::INFINITY, |l| l.dist_sup(&pred));
    let mut checks = vec![converged("converged", &tr), Check::below("oracle_gap", gap, cfg.tol)];
    checks.push(Check::below("predicted_loss", loss(&pred, s, act)?, MINIMUM_TOL));
    if let Some(l) = &tr.limit {
        checks.push(Check::below("integrated_loss", loss(l, s, act)?, MINIMUM_TOL));
    }
    out.write(
        "prediction.json",
        &json(&Prediction { theta0: th, sample: s, predicted: pred, integrated: tr.limit.clone(), gap }),
    )?;
    out.write("trajectory_1.csv", &tr.to_csv())?;
    Ok(checks)
}

#[derive(Serialize)]
struct RecipeA<'a> {
    theta0: &'a Params,
    target: &'a Params,
    sample: &'a Sample,
    limit: Option<Params>,
    gap: f64,
}

fn recipe_a(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let th = cfg.theta0()?;
    let target = cfg.target.as_ref().ok_or(ConfigError::Missing("target"))?;
    let s = recipe_a_sample(th, target)?;
    let tr = run_flow(th, &s, &Activation::Exp, &cfg.gf)?;
    let gap = tr.limit.as_ref().map_or(f64::INFINITY, |l| l.dist_sup(target));
    out.write("recipe_a.json", &json(&RecipeA { theta0: th, target, sample: &s, limit: tr.limit.clone(), gap }))?;
    write_portrait(&[(&s, &tr)], &Activation::Exp, cfg, "recipe A", out)?;
    Ok(vec![converged("converged", &tr), Check::below("target_gap", gap, cfg.tol)])
}

pub(crate) fn recipe_b_checks(theta0: &Params, steps: usize, cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let st = recipe_b_run(theta0, steps, &cfg.recipe_b)?;
    let text = st.to_json();
    out.write("state.json", &text)?;
    let act = Activation::piecewise(st.sigma_n.clone());
    let mut table = String::from("z,sigma\n");
    let (lo, hi) = st.e_n.iter().fold((0.0_f64, 0.0_f64), |(l, h), iv| (l.min(iv.lo), h.max(iv.hi)));
    let pad = 0.05 * (hi - lo).max(1.0);
    for i in 0..cfg.grid {
        let z = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / (cfg.grid - 1) as f64;
        if let Ok(v) = act.eval(z, 0) {
            table.push_str(&format!("{z:?},{v:?}\n"));
        }
    }
    out.write("sigma.csv", &table)?;
    let rb = &cfg.recipe_b;
    let mut checks = Vec::new();
    let worst_limit = st.limit_errors.iter().copied().fold(0.0, f64::max);
    checks.push(Check::below("limit_error", worst_limit, rb.limit_tol));
    for (&(i, j), &l) in st.pairings.iter().zip(&st.pairing_losses) {
        checks.push(Check::below(format!("pairing_{i}_{j}"), l, rb.pairing_tol));
        checks.push(Check::above(
            format!("distinct_{i}_{j}"),
            st.limits[i - 1].dist_sup(&st.limits[j - 1]),
            rb.distinct_tol,
        ));
    }
    let (_, same) = replay_recipe_b(&text)?;
    checks.push(Check::flag("replay_identical", same));
    Ok(checks)
}

fn recipe_b(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    recipe_b_checks(cfg.theta0()?, cfg.steps, cfg, out)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn two_point(
    th: &Params,
    s1: &Sample,
    s2: &Sample,
    act: &Activation,
    tol: f64,
    sep_min: f64,
    cfg: &ExperimentConfig,
    out: &mut Output,
) -> Checks {
    let r = verify_two_point(th, s1, s2, act, tol, sep_min, &cfg.gf)?;
    out.write("two_point.json", &json(&r))?;
    let t1 = run_flow(th, s1, act, &cfg.gf)?;
    let t2 = run_flow(th, s2, act, &cfg.gf)?;
    write_portrait(&[(s1, &t1), (s2, &t2)], act, cfg, "two-point overlap", out)?;
    Ok(vec![
        Check::below("self_loss_1", r.self_losses.0, MINIMUM_TOL),
        Check::below("self_loss_2", r.self_losses.1, MINIMUM_TOL),
        Check::below("cross_loss_1", r.cross_losses.0, tol),
        Check::below("cross_loss_2", r.cross_losses.1, tol),
        Check::above("separation", r.separation, sep_min),
        Check::flag("verdict", r.verdict),
    ])
}

pub(crate) fn one_point(
    th: &Params,
    xs: &[f64],
    act: &Activation,
    tol: f64,
    cfg: &ExperimentConfig,
    out: &mut Output,
) -> Checks {
    let ss = one_point_samples(th, xs, act)?;
    let r = verify_one_point(th, &ss, act, tol, &cfg.gf)?;
    out.write("one_point.json", &json(&r))?;
    let trs = ss.iter().map(|s| run_flow(th, s, act, &cfg.gf)).collect::<Result<Vec<_>, _>>()?;
    let pairs: Vec<(&Sample, &Trajectory)> = ss.iter().zip(&trs).collect();
    write_portrait(&pairs, act, cfg, "one-point overlap", out)?;
    let mut checks = vec![Check::below("max_limit_error", r.max_limit_error, tol)];
    if ss.len() > 1 {
        checks.push(Check::above("min_pairwise_angle", r.min_pairwise_angle, ANGLE_MIN));
    }
    let degenerate = r.degenerate.map(|d| format!("{d:?}"));
    let mut c = Check::flag("independent_directions", degenerate.is_none());
    if let Some(d) = degenerate {
        c = c.with_detail(d);
    }
    checks.push(c);
    Ok(checks)
}

fn criterion(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let r = nondegeneracy(&cfg.activation, cfg.w, cfg.x0)?;
    out.write("criterion.json", &json(&r))?;
    let mut checks =
        vec![Check::flag("nondegenerate", r.verdict == Verdict::Nondegenerate).with_detail(format!("{:?}", r.verdict))];
    if let Some(b) = r.bound_verified {
        checks.push(Check::flag("local_bound", b));
    }
    Ok(checks)
}

pub(crate) fn fig1(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let th = Params::scalar(FIG1_THETA0.0, FIG1_THETA0.1);
    let [s1, s2] = FIG1_SAMPLES.map(|(x, y)| Sample::scalar(x, y));
    let act = Activation::Sigmoid;
    let local = ExperimentConfig { w_range: None, ..cfg.clone() };
    let mut checks = two_point(&th, &s1, &s2, &act, 1e-4, 0.05, &local, out)?;
    let l1 = run_flow(&th, &s1, &act, &cfg.gf)?.limit;
    let l2 = run_flow(&th, &s2, &act, &cfg.gf)?.limit;
    if let (Some(l1), Some(l2)) = (l1, l2) {
        let tb = trace_back_search(&l1, &l2, &s1, &s2, &act, &cfg.trace)?;
        out.write("trace_back.json", &json(&tb))?;
        checks.push(Check::below("trace_back_gap", tb.theta0.dist_sup(&th), 0.05));
    }
    Ok(checks)
}

pub(crate) fn fig2(cfg: &ExperimentConfig, out: &mut Output) -> Checks {
    let th = Params::scalar(FIG2_THETA0.0, FIG2_THETA0.1);
    let local = ExperimentConfig { w_range: None, ..cfg.clone() };
    one_point(&th, &FIG2_XS, &Activation::Softplus, 1e-4, &local, out)
}
