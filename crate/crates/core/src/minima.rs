//! Global-minima curves `𝔐_S = {a·σ(xw) = y}`, their intersections, and the
//! overlap determinant `F(p, x) = σ̃(xw)σ̃(x₀p) − σ̃(xp)σ̃(x₀w)`.
//!
//! If the minima curves of `(x₀, y₀)` and `(x, y)` both pass through a point
//! with first coordinate `w`, they meet again at `p` exactly when
//! `F(p, x) = 0`. `F` vanishes on the axes `p = w` and `x = x₀`; its mixed
//! derivative at `(w, x₀)` is `−w·σ̃(u)σ̃'(u)·c` with `u = x₀w` and
//! `c = 1/w − x₀[σ̃'/σ̃ − σ̃''/σ̃'](u)`, the nondegeneracy criterion. A
//! nonzero `c` rules out second intersections for nearby `(p, x)`.

use crate::activation::Activation;
use crate::error::{LabError, Result};
use crate::gradflow::{loss, Params, Sample};
use crate::numeric::diff_of_products;
use crate::numeric::roots;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Grid points where `σ(xw)` falls below this are treated as poles.
pub const POLE_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_SCAN: usize = 4096;
pub const CRITERION_TOL: f64 = 1e-8;
pub const POWER_LIKE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaCurve {
    pub sample: Sample,
    pub w_grid: Vec<f64>,
    /// `y·σ̃(xw)`; NaN at poles.
    pub a_values: Vec<f64>,
    pub is_pole: Vec<bool>,
    pub poles: Vec<f64>,
    /// `x = 0`: the curve is the horizontal line `a = y/σ(0)`.
    pub horizontal: bool,
}

impl MinimaCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,a,is_pole\n");
        for ((w, a), p) in self.w_grid.iter().zip(&self.a_values).zip(&self.is_pole) {
            let _ = writeln!(out, "{w:?},{a:?},{}", u8::from(*p));
        }
        out
    }

    /// Non-pole points as `(w, a)` pairs.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.w_grid
            .iter()
            .zip(&self.a_values)
            .zip(&self.is_pole)
            .filter(|(_, p)| !**p)
            .map(|((w, a), _)| (*w, *a))
            .collect()
    }
}

fn scalar_sample(s: &Sample) -> Result<f64> {
    if s.x.len() != 1 {
        return Err(LabError::Dimension { expected: 1, got: s.x.len() });
    }
    Ok(s.x1())
}

fn uniform_grid(range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(LabError::InvalidInput(format!("grid needs at least 2 points, got {n}")));
    }
    let (lo, hi) = range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(LabError::InvalidInput(format!("bad range ({lo}, {hi})")));
    }
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
}

/// `y·σ̃(xw)`, or `None` at a pole or outside the domain.
fn curve_value(act: &Activation, x: f64, y: f64, w: f64) -> Option<f64> {
    let z = x * w;
    let s = act.eval(z, 0).ok()?;
    if !(s >= POLE_THRESHOLD) {
        return None;
    }
    let r = act.recip(z, 0).ok()?;
    Some(y * r).filter(|v| v.is_finite())
}

/// Samples `a(w) = y·σ̃(xw)` on an `n`-point uniform grid over `w_range`.
pub fn minima_curve(s: &Sample, act: &Activation, w_range: (f64, f64), n: usize) -> Result<MinimaCurve> {
    let x = scalar_sample(s)?;
    let w_grid = uniform_grid(w_range, n)?;
    let mut a_values = Vec::with_capacity(n);
    let mut is_pole = Vec::with_capacity(n);
    let mut poles = Vec::new();
    for &w in &w_grid {
        match curve_value(act, x, s.y, w) {
            Some(a) => {
                a_values.push(a);
                is_pole.push(false);
            }
            None => {
                a_values.push(f64::NAN);
                is_pole.push(true);
                poles.push(w);
            }
        }
    }
    Ok(MinimaCurve { sample: s.clone(), w_grid, a_values, is_pole, poles, horizontal: x == 0.0 })
}

/// `L(θ, S) < tol`; evaluation failures count as "not on the curve".
pub fn on_minima(theta: &Params, s: &Sample, act: &Activation, tol: f64) -> bool {
    matches!(loss(theta, s, act), Ok(l) if l < tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersections {
    /// `(w*, y₁σ̃(x₁w*))`, sorted by `w*`.
    pub points: Vec<Params>,
    /// The two curves agree at every scanned point.
    pub all_coincident: bool,
    /// Grid points skipped as poles of either curve.
    pub pole_ws: Vec<f64>,
}

/// Roots of `g(w) = y₁σ̃(x₁w) − y₂σ̃(x₂w)` in `w_range`: sign-change scan on
/// `n` points, skipping poles and their neighbours, then bisection.
pub fn curve_intersections(
    s1: &Sample,
    s2: &Sample,
    act: &Activation,
    w_range: (f64, f64),
    n: usize,
) -> Result<Intersections> {
    let (x1, x2) = (scalar_sample(s1)?, scalar_sample(s2)?);
    if x1 == 0.0 || x2 == 0.0 || s1.y == 0.0 || s2.y == 0.0 {
        return Err(LabError::InvalidInput("intersections need nonzero inputs and targets".into()));
    }
    let grid = uniform_grid(w_range, n)?;
    let g = |w: f64| -> Option<f64> { Some(curve_value(act, x1, s1.y, w)? - curve_value(act, x2, s2.y, w)?) };
    let values: Vec<Option<f64>> = grid.iter().map(|&w| g(w)).collect();
    let pole_ws: Vec<f64> = grid.iter().zip(&values).filter(|(_, v)| v.is_none()).map(|(w, _)| *w).collect();
    let usable: Vec<bool> = (0..n)
        .map(|i| values[i].is_some() && (i == 0 || values[i - 1].is_some()) && (i + 1 == n || values[i + 1].is_some()))
        .collect();
    let all_coincident = usable.iter().any(|&u| u) && (0..n).filter(|&i| usable[i]).all(|i| values[i] == Some(0.0));
    let mut points = Vec::new();
    if !all_coincident {
        for i in 0..n {
            if !usable[i] {
                continue;
            }
            let gi = values[i].unwrap();
            if gi == 0.0 {
                points.push(grid[i]);
                continue;
            }
            if i + 1 < n && usable[i + 1] {
                let gj = values[i + 1].unwrap();
                if gj != 0.0 && gi.signum() != gj.signum() {
                    let root = roots::bisect(|w| g(w).unwrap_or(f64::NAN), grid[i], grid[i + 1], 0.0, 1e-12)
                        .map_err(|_| LabError::BracketFailure { lo: grid[i], hi: grid[i + 1] })?;
                    points.push(root.x);
                }
            }
        }
    }
    let points =
        points.into_iter().map(|w| Params::scalar(w, s1.y * act.recip(x1 * w, 0).unwrap_or(f64::NAN))).collect();
    Ok(Intersections { points, all_coincident, pole_ws })
}

/// `F(p, x) = σ̃(xw)σ̃(x₀p) − σ̃(xp)σ̃(x₀w)`.
pub fn f_value(p: f64, x: f64, w: f64, x0: f64, act: &Activation) -> Result<f64> {
    Ok(diff_of_products(act.recip(x * w, 0)?, act.recip(x0 * p, 0)?, act.recip(x * p, 0)?, act.recip(x0 * w, 0)?))
}

/// `1/w − x₀[σ̃'(u)/σ̃(u) − σ̃''(u)/σ̃'(u)]` at `u = x₀w`.
pub fn criterion(act: &Activation, w: f64, x0: f64) -> Result<f64> {
    if act.smoothness() < 2 {
        return Err(LabError::Smoothness { z: x0 * w, order: 2, reason: "criterion needs σ̃''" });
    }
    if w == 0.0 {
        return Err(LabError::InvalidInput("criterion needs w ≠ 0".into()));
    }
    let u = x0 * w;
    let r0 = act.recip(u, 0)?;
    let r1 = act.recip(u, 1)?;
    let r2 = act.recip(u, 2)?;
    if r1 == 0.0 {
        return Err(LabError::DerivativeZero { z: u });
    }
    Ok(1.0 / w - x0 * (r1 / r0 - r2 / r1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Nondegenerate,
    Degenerate,
    PowerLike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyReport {
    pub x0: f64,
    pub w: f64,
    pub criterion: f64,
    pub verdict: Verdict,
    /// `min |F|` over the punctured local grid.
    pub grid_min_abs_f: f64,
    pub grid_max_abs_f: f64,
    /// `|w·σ̃(x₀w)·σ̃'(x₀w)|`, so that `|scale·criterion|` is the mixed
    /// derivative `|∂²F/∂p∂x|` at `(w, x₀)`.
    pub mixed_scale: f64,
    /// `min |F| / (|p−w||x−x₀|)` over the grid.
    pub grid_min_ratio: f64,
    /// For nondegenerate verdicts: `|F| ≥ (|scale·criterion|/4)|p−w||x−x₀|`
    /// at every grid point.
    pub bound_verified: Option<bool>,
}

/// Offsets `±δ` with `δ` log-spaced over `[1e-3, 1e-2]`.
pub fn local_offsets(per_side: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * per_side);
    for k in 0..per_side {
        let t = if per_side == 1 { 0.0 } else { k as f64 / (per_side - 1) as f64 };
        let d = 10f64.powf(-3.0 + t);
        v.push(d);
        v.push(-d);
    }
    v.sort_by(f64::total_cmp);
    v
}

pub fn nondegeneracy(act: &Activation, w: f64, x0: f64) -> Result<NondegeneracyReport> {
    let c = criterion(act, w, x0)?;
    let u = x0 * w;
    let mixed_scale = (w * act.recip(u, 0)? * act.recip(u, 1)?).abs();
    let offs = local_offsets(8);
    let (mut fmin, mut fmax, mut rmin) = (f64::INFINITY, 0.0_f64, f64::INFINITY);
    let mut bound_ok = true;
    let slope = (mixed_scale * c).abs() / 4.0;
    for &dp in &offs {
        for &dx in &offs {
            let f = f_value(w + dp, x0 + dx, w, x0, act)?.abs();
            let area = (dp * dx).abs();
            fmin = fmin.min(f);
            fmax = fmax.max(f);
            rmin = rmin.min(f / area);
            if f < slope * area {
                bound_ok = false;
            }
        }
    }
    let verdict = if c.abs() > CRITERION_TOL {
        Verdict::Nondegenerate
    } else if fmax < POWER_LIKE_TOL {
        Verdict::PowerLike
    } else {
        Verdict::Degenerate
    };
    Ok(NondegeneracyReport {
        x0,
        w,
        criterion: c,
        verdict,
        grid_min_abs_f: fmin,
        grid_max_abs_f: fmax,
        mixed_scale,
        grid_min_ratio: rmin,
        bound_verified: (verdict == Verdict::Nondegenerate).then_some(bound_ok),
    })
}

/// The `x₀ ∈ [lo, hi]` at which the criterion changes sign, to `1e-10`.
pub fn criterion_root(act: &Activation, w: f64, lo: f64, hi: f64) -> Result<f64> {
    roots::bisect(|x0| criterion(act, w, x0).unwrap_or(f64::NAN), lo, hi, 1e-12, 0.0)
        .map(|r| r.x)
        .map_err(|_| LabError::BracketFailure { lo, hi })
}
