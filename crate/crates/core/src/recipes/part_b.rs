//! Repeated two-point construction with a piecewise activation.
//!
//! Every flow `j` runs from the common `θ₀` to a target `θ_j*` along a
//! segment of pre-activations `x_j·[w₀, w_j*]` on which the activation is an
//! exponential. Step `n` picks a partner `k < n` and a target `θ_n*` such
//! that `w_k*` lies outside `[w₀, w_n*]`, redefines the activation at the
//! isolated point `x_k·w_n*` so that `θ_n*` lies on the minima curve of
//! `S_k`, and chooses `|x_n|` so large that the new segment and the new
//! point `x_n·w_k*` clear everything defined so far. The value at
//! `x_n·w_k*` then places `θ_k*` on the minima curve of `S_n`.

use crate::activation::{Activation, BlendMode, Exception, PiecewiseActivation, Segment};
use crate::error::{LabError, Result};
use crate::gradflow::{integrate, loss, GFConfig, Params, Sample, Trajectory};
use crate::numeric::halton2;
use crate::recipes::recipe_a_sample;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecipeBMode {
    /// Targets drawn one after another, each paired with the earliest
    /// admissible previous target.
    Sequential,
    /// After the first two steps, `m` further targets sampled from the ball
    /// of the given radius around `θ₂*`, each paired with `θ₁*`. Blends are
    /// plain Hermite since the segment slopes may have either sign.
    Ball { radius: f64, m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecipeBConfig {
    pub gf: GFConfig,
    /// Integrated limits must land this close to their targets.
    pub limit_tol: f64,
    /// Loss threshold for the pairing memberships.
    pub pairing_tol: f64,
    /// Paired limits must be farther apart than this.
    pub distinct_tol: f64,
    /// Forced input `x_n` for chosen steps.
    pub x_overrides: BTreeMap<usize, f64>,
    /// Candidate draws per step before giving up.
    pub search_budget: usize,
    /// Factor by which `|x_n|` exceeds the step (c) bound.
    pub growth: f64,
    /// Largest exponent `x̃·w` allowed on a segment.
    pub max_exponent: f64,
    pub mode: RecipeBMode,
}

impl Default for RecipeBConfig {
    fn default() -> Self {
        RecipeBConfig {
            gf: GFConfig::default(),
            limit_tol: 1e-6,
            pairing_tol: 1e-8,
            distinct_tol: 1e-2,
            x_overrides: BTreeMap::new(),
            search_budget: 256,
            growth: 1.5,
            max_exponent: 30.0,
            mode: RecipeBMode::Sequential,
        }
    }
}

/// Closed interval of visited pre-activations; `lo == hi` marks an isolated
/// redefinition point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EInterval {
    pub lo: f64,
    pub hi: f64,
}

impl EInterval {
    fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    /// Partner index; `None` for the first step.
    pub k: Option<usize>,
    pub draw_index: u64,
    pub target: Params,
    pub sample: Sample,
    /// Exponential-flow input reproducing the flow on this segment.
    pub x_tilde: f64,
    /// Activation on the segment is `z ↦ e^{scale·z}`.
    pub scale: f64,
    pub segment: EInterval,
    /// `sup{|z| : z ∈ Ẽ_{n−1}} / |x_n|`.
    pub sup_ratio: f64,
    /// `min{|w_k*|, |w₀|, |w_n*|}`; step (c) needs `sup_ratio` below it.
    pub min_projection: f64,
    pub exceptions: Vec<Exception>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipeBState {
    pub n: usize,
    pub requested_n: usize,
    pub theta0: Params,
    pub config: RecipeBConfig,
    pub sigma_n: PiecewiseActivation,
    pub samples: Vec<Sample>,
    pub targets: Vec<Params>,
    pub limits: Vec<Params>,
    pub limit_errors: Vec<f64>,
    pub e_n: Vec<EInterval>,
    /// `(i, j)`, 1-based: `θ_i*` lies on the minima curve of `S_j`.
    pub pairings: Vec<(usize, usize)>,
    pub pairing_losses: Vec<f64>,
    pub steps: Vec<StepRecord>,
}

impl RecipeBState {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }
}

struct Builder<'a> {
    theta0: &'a Params,
    cfg: &'a RecipeBConfig,
    mode: BlendMode,
    steps: Vec<StepRecord>,
    e: Vec<EInterval>,
    exceptions: Vec<Exception>,
}

fn sorted(a: f64, b: f64) -> EInterval {
    EInterval { lo: a.min(b), hi: a.max(b) }
}

impl Builder<'_> {
    fn w0(&self) -> f64 {
        self.theta0.w1()
    }

    fn activation(&self) -> Result<Activation> {
        let p = if self.steps.len() == 1 {
            PiecewiseActivation::with_mode(
                vec![Segment::new(f64::NEG_INFINITY, f64::INFINITY, Activation::Exp)],
                vec![],
                1,
                self.mode,
            )?
        } else {
            let segs = self
                .steps
                .iter()
                .map(|s| Segment::scaled(s.segment.lo, s.segment.hi, Activation::Exp, s.scale))
                .collect();
            PiecewiseActivation::with_mode(segs, self.exceptions.clone(), 1, self.mode)?
        };
        Ok(Activation::piecewise(p))
    }

    fn in_e(&self, z: f64) -> bool {
        self.e.iter().any(|iv| iv.contains(z))
    }

    fn sup_e(&self) -> f64 {
        self.e.iter().fold(0.0_f64, |m, iv| m.max(iv.lo.abs()).max(iv.hi.abs()))
    }

    /// Largest exponent reached on any segment so far.
    fn peak_exponent(&self) -> f64 {
        self.steps.iter().map(|s| s.x_tilde.abs() * self.w0().abs().max(s.target.w1().abs())).fold(0.0, f64::max)
    }

    /// Targets that will be paired with `t` must sit `2·distinct_tol` away;
    /// in ball mode only the partner pairs with `t`, so the other ball points
    /// merely have to differ.
    fn distinct(&self, k: usize, t: &Params, ball: bool) -> bool {
        let margin = 2.0 * self.cfg.distinct_tol;
        t.dist_sup(self.theta0) > margin
            && self.steps.iter().all(|s| {
                let d = s.target.dist_sup(t);
                if !ball || s.n == k {
                    d > margin
                } else {
                    d > 0.0
                }
            })
    }

    fn run_flow(&self, index: usize, s: &Sample, act: &Activation, target: &Params) -> Result<(Trajectory, f64)> {
        let tr = integrate(self.theta0, s, act, &self.cfg.gf)?;
        let Some(limit) = tr.limit.as_ref() else {
            return Err(LabError::NonConvergence { index, status: tr.status.to_string() });
        };
        let distance = limit.dist_sup(target);
        if !(distance < self.cfg.limit_tol) {
            return Err(LabError::LimitMismatch { index, distance });
        }
        Ok((tr, distance))
    }

    fn first_step(&mut self) -> Result<()> {
        let (w0, a0) = (self.w0(), self.theta0.a);
        let (u1, u2) = halton2(1);
        let target = Params::scalar(w0 * (1.1 + 0.2 * u1), a0 * (1.5 + 0.5 * u2));
        let sample = recipe_a_sample(self.theta0, &target)?;
        let x = sample.x1();
        self.steps.push(StepRecord {
            n: 1,
            k: None,
            draw_index: 1,
            target: target.clone(),
            sample: sample.clone(),
            x_tilde: x,
            scale: 1.0,
            segment: sorted(x * w0, x * target.w1()),
            sup_ratio: 0.0,
            min_projection: 0.0,
            exceptions: vec![],
        });
        let act = self.activation()?;
        let (tr, _) = self.run_flow(1, &sample, &act, &target)?;
        self.absorb_range(0, &tr);
        Ok(())
    }

    /// Widens segment `j` and its `E` interval to the recorded range.
    fn absorb_range(&mut self, j: usize, tr: &Trajectory) {
        let (lo, hi) = tr.pre_activation_range(&self.steps[j].sample);
        let seg = &mut self.steps[j].segment;
        seg.lo = seg.lo.min(lo);
        seg.hi = seg.hi.max(hi);
        let seg = *seg;
        if j < self.e.len() {
            self.e[j] = seg;
        } else {
            self.e.push(seg);
        }
    }

    /// Candidate target for step `n` paired with `k`, or `None` if rejected.
    fn sequential_candidate(&self, k: usize, draw: u64) -> Option<(Params, f64)> {
        let (w0, a0) = (self.w0(), self.theta0.a);
        let wk = self.steps[k - 1].target.w1();
        let (u1, u2) = halton2(draw);
        let f = 0.02 + 0.28 * u1;
        // Move w away from w_k* so that w_k* stays outside [w₀, w_n*].
        let eps = if wk / w0 > 1.0 { -1.0 } else { 1.0 };
        let wn = w0 * (1.0 + eps * f);
        let lo_w = w0.abs().min(wn.abs());
        let mut xt = self.peak_exponent() * (1.05 + 0.2 * u2) / lo_w;
        if eps < 0.0 {
            xt = xt.max(4.0 * f * w0.abs() / (a0 * a0));
        }
        if xt * w0.abs().max(wn.abs()) > self.cfg.max_exponent {
            return None;
        }
        let an2 = a0 * a0 + 2.0 * eps * f * w0.abs() / xt;
        if !(an2 > 0.04 * a0 * a0) {
            return None;
        }
        Some((Params::scalar(wn, a0.signum() * an2.sqrt()), xt))
    }

    fn ball_candidate(&self, radius: f64, draw: u64) -> Option<Params> {
        let center = &self.steps[1].target;
        let (u1, u2) = halton2(draw);
        let r = radius * u1.sqrt();
        let ang = 2.0 * std::f64::consts::PI * u2;
        Some(Params::scalar(center.w1() + r * ang.cos(), center.a + r * ang.sin()))
    }

    fn admissible(&self, k: usize, t: &Params, ball: bool) -> bool {
        let (w0, a0) = (self.w0(), self.theta0.a);
        let wk = self.steps[k - 1].target.w1();
        let wn = t.w1();
        let (lo, hi) = (w0.min(wn), w0.max(wn));
        let z = self.steps[k - 1].sample.x1() * wn;
        wn != w0
            && wn * w0 > 0.0
            && wk != 0.0
            && !(lo <= wk && wk <= hi)
            && t.a * a0 > 0.0
            && t.a * t.a != a0 * a0
            && z != 0.0
            && !self.in_e(z)
            && self.distinct(k, t, ball)
    }

    fn next_step(&mut self, n: usize, budget_base: u64, ball: Option<f64>) -> Result<()> {
        let w0 = self.w0();
        let mut chosen = None;
        let ks: Vec<usize> = if ball.is_some() { vec![1] } else { (1..n).collect() };
        'search: for &k in &ks {
            for i in 1..=self.cfg.search_budget as u64 {
                let draw = budget_base + i;
                let cand = match ball {
                    Some(r) => self.ball_candidate(r, draw),
                    None => self.sequential_candidate(k, draw).map(|(t, _)| t),
                };
                let Some(t) = cand else { continue };
                if !self.admissible(k, &t, ball.is_some()) {
                    continue;
                }
                let Ok(s) = recipe_a_sample(self.theta0, &t) else { continue };
                if s.x1().abs() * w0.abs().max(t.w1().abs()) > self.cfg.max_exponent {
                    continue;
                }
                chosen = Some((k, draw, t, s));
                break 'search;
            }
        }
        let Some((k, draw, target, tilde)) = chosen else {
            return Err(LabError::ConstraintFailure {
                step: n,
                detail: format!("no admissible target among {} draws (step (a))", self.cfg.search_budget),
            });
        };
        let partner = self.steps[k - 1].clone();
        let (wk, ak, xk, yk) = (partner.target.w1(), partner.target.a, partner.sample.x1(), partner.sample.y);
        let (wn, an) = (target.w1(), target.a);
        let z_back = xk * wn;
        let back = Exception { z: z_back, value: yk / an };
        self.e.push(EInterval { lo: z_back, hi: z_back });

        let sup = self.sup_e();
        let min_proj = wk.abs().min(w0.abs()).min(wn.abs());
        let bound = sup / min_proj;
        let xn = match self.cfg.x_overrides.get(&n) {
            Some(&x) => {
                if !(x.abs() > bound) {
                    return Err(LabError::ConstraintFailure {
                        step: n,
                        detail: format!(
                            "step (c): sup|z|/|x_n| = {} is not below min(|w_k*|, |w0|, |w_n*|) = {min_proj}",
                            sup / x.abs()
                        ),
                    });
                }
                x
            }
            None => {
                let mut x = w0.signum() * self.cfg.growth * bound;
                let mut tries = 0;
                while !self.clears(x, w0, wn, wk) {
                    x *= self.cfg.growth;
                    tries += 1;
                    if tries > self.cfg.search_budget {
                        return Err(LabError::ConstraintFailure {
                            step: n,
                            detail: "no input clears the defined region (step (c))".into(),
                        });
                    }
                }
                x
            }
        };
        let scale = tilde.x1() / xn;
        let y = an * (scale * (xn * wn)).exp();
        let forward = Exception { z: xn * wk, value: y / ak };
        let sample = Sample::scalar(xn, y);
        self.exceptions.push(back);
        self.exceptions.push(forward);
        self.steps.push(StepRecord {
            n,
            k: Some(k),
            draw_index: draw,
            target: target.clone(),
            sample: sample.clone(),
            x_tilde: tilde.x1(),
            scale,
            segment: sorted(xn * w0, xn * wn),
            sup_ratio: sup / xn.abs(),
            min_projection: min_proj,
            exceptions: vec![back, forward],
        });
        let act = self.activation()?;
        let (tr, _) = self.run_flow(n, &sample, &act, &target)?;
        let j = self.steps.len() - 1;
        let (lo, hi) = tr.pre_activation_range(&sample);
        let seg = &mut self.steps[j].segment;
        seg.lo = seg.lo.min(lo);
        seg.hi = seg.hi.max(hi);
        let seg = *seg;
        self.e.push(seg);
        self.e.push(EInterval { lo: forward.z, hi: forward.z });
        Ok(())
    }

    /// The new segment `x·[w₀, w_n*]` and point `x·w_k*` avoid `Ẽ`.
    fn clears(&self, x: f64, w0: f64, wn: f64, wk: f64) -> bool {
        let seg = sorted(x * w0, x * wn);
        let pt = x * wk;
        self.e.iter().all(|iv| iv.hi < seg.lo || iv.lo > seg.hi) && !self.in_e(pt) && !seg.contains(pt)
    }
}

/// Runs `n` steps of the repeated construction from `theta0` (for
/// [`RecipeBMode::Ball`], `n` must be 2 and the ball adds `m` more steps),
/// then re-integrates every flow under the final activation and certifies
/// every pairing at the exact targets.
pub fn recipe_b_run(theta0: &Params, n: usize, cfg: &RecipeBConfig) -> Result<RecipeBState> {
    if theta0.w.len() != 1 {
        return Err(LabError::Dimension { expected: 1, got: theta0.w.len() });
    }
    if theta0.w1() == 0.0 || theta0.a == 0.0 || !theta0.is_finite() {
        return Err(LabError::InvalidInput("recipe B needs finite w0 ≠ 0 and a0 ≠ 0".into()));
    }
    if !(cfg.growth > 1.0) || cfg.search_budget == 0 {
        return Err(LabError::InvalidInput("growth must exceed 1 and the search budget be positive".into()));
    }
    let (mode, ball) = match cfg.mode {
        RecipeBMode::Sequential => {
            if !(1..=6).contains(&n) {
                return Err(LabError::InvalidInput(format!("sequential recipe B runs 1..=6 steps, got {n}")));
            }
            (BlendMode::Monotone, None)
        }
        RecipeBMode::Ball { radius, m } => {
            if n != 2 || !(1..=32).contains(&m) || !(radius > 0.0) {
                return Err(LabError::InvalidInput("ball mode needs n = 2, 1 ≤ m ≤ 32 and a positive radius".into()));
            }
            (BlendMode::Plain, Some((radius, m)))
        }
    };
    let mut b = Builder { theta0, cfg, mode, steps: Vec::new(), e: Vec::new(), exceptions: Vec::new() };
    b.first_step()?;
    let per_step = cfg.search_budget as u64 * n.max(2) as u64;
    for step in 2..=n {
        b.next_step(step, (step as u64 - 1) * per_step, None)?;
    }
    if let Some((radius, m)) = ball {
        for j in 0..m {
            let step = 3 + j;
            b.next_step(step, (step as u64 - 1) * per_step, Some(radius))?;
        }
    }
    finish(b, n)
}

fn finish(mut b: Builder<'_>, requested_n: usize) -> Result<RecipeBState> {
    let act = b.activation()?;
    let mut limits = Vec::new();
    let mut errors = Vec::new();
    for j in 0..b.steps.len() {
        let (s, t) = (b.steps[j].sample.clone(), b.steps[j].target.clone());
        let (tr, err) = b.run_flow(j + 1, &s, &act, &t)?;
        let (lo, hi) = tr.pre_activation_range(&s);
        let iv = &mut b.e[e_index(j)];
        iv.lo = iv.lo.min(lo);
        iv.hi = iv.hi.max(hi);
        limits.push(tr.limit.unwrap());
        errors.push(err);
    }
    let mut pairings = Vec::new();
    let mut pairing_losses = Vec::new();
    for st in &b.steps {
        let Some(k) = st.k else { continue };
        let n = st.n;
        let partner = &b.steps[k - 1];
        for (i, j, point, sample) in [(k, n, &partner.target, &st.sample), (n, k, &st.target, &partner.sample)] {
            let l = loss(point, sample, &act)?;
            if !(l < b.cfg.pairing_tol) {
                return Err(LabError::ConstraintFailure {
                    step: n,
                    detail: format!("pairing ({i}, {j}) has loss {l} ≥ {}", b.cfg.pairing_tol),
                });
            }
            pairings.push((i, j));
            pairing_losses.push(l);
        }
        let gap = limits[k - 1].dist_sup(&limits[n - 1]);
        if !(gap > b.cfg.distinct_tol) {
            return Err(LabError::ConstraintFailure {
                step: n,
                detail: format!("limits {k} and {n} are only {gap} apart"),
            });
        }
    }
    let Activation::Piecewise(sigma) = act else { unreachable!("recipe activations are piecewise") };
    Ok(RecipeBState {
        n: b.steps.len(),
        requested_n,
        theta0: b.theta0.clone(),
        config: b.cfg.clone(),
        sigma_n: (*sigma).clone(),
        samples: b.steps.iter().map(|s| s.sample.clone()).collect(),
        targets: b.steps.iter().map(|s| s.target.clone()).collect(),
        limits,
        limit_errors: errors,
        e_n: b.e,
        pairings,
        pairing_losses,
        steps: b.steps,
    })
}

/// Position of flow `j`'s interval in `E`: step 1 contributes one interval,
/// each later step a back point, its interval and a forward point.
fn e_index(j: usize) -> usize {
    if j == 0 {
        0
    } else {
        3 * j - 1
    }
}

/// Re-runs the construction recorded in a serialized state. Returns the
/// fresh state and whether its serialization matches `json` byte for byte.
pub fn replay_recipe_b(json: &str) -> Result<(RecipeBState, bool)> {
    let old: RecipeBState =
        serde_json::from_str(json).map_err(|e| LabError::InvalidInput(format!("bad recipe B state: {e}")))?;
    let fresh = recipe_b_run(&old.theta0, old.requested_n, &old.config)?;
    let same = fresh.to_json() == json;
    Ok((fresh, same))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta0() -> Params {
        Params::scalar(1.0, 1.0)
    }

    #[test]
    fn two_steps_pair_both_ways() {
        let st = recipe_b_run(&theta0(), 2, &RecipeBConfig::default()).unwrap();
        assert_eq!(st.pairings, vec![(1, 2), (2, 1)]);
        assert!(st.limit_errors.iter().all(|&e| e < 1e-6));
        assert!(st.pairing_losses.iter().all(|&l| l < 1e-8));
        let s = &st.steps[1];
        assert!(s.sup_ratio < s.min_projection);
    }

    #[test]
    fn four_steps_and_replay() {
        let st = recipe_b_run(&theta0(), 4, &RecipeBConfig::default()).unwrap();
        assert_eq!(st.targets.len(), 4);
        assert_eq!(st.pairings.len(), 6);
        let (again, same) = replay_recipe_b(&st.to_json()).unwrap();
        assert!(same);
        assert_eq!(again, st);
    }

    #[test]
    fn small_override_fails_step_c() {
        let mut cfg = RecipeBConfig::default();
        cfg.x_overrides.insert(2, 1e-3);
        match recipe_b_run(&theta0(), 2, &cfg) {
            Err(LabError::ConstraintFailure { step: 2, detail }) => assert!(detail.contains("step (c)")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ball_mode_adds_points() {
        let cfg = RecipeBConfig { mode: RecipeBMode::Ball { radius: 0.05, m: 4 }, ..Default::default() };
        let st = recipe_b_run(&theta0(), 2, &cfg).unwrap();
        assert_eq!(st.targets.len(), 6);
        for t in &st.targets[2..] {
            assert!(t.dist_sup(&st.targets[1]) <= 0.05 * 2f64.sqrt());
        }
    }

    #[test]
    fn negative_start() {
        let st = recipe_b_run(&Params::scalar(-0.8, -1.2), 3, &RecipeBConfig::default()).unwrap();
        assert_eq!(st.pairings.len(), 4);
    }
}
