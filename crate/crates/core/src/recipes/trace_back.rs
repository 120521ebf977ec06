use crate::activation::Activation;
use crate::error::{LabError, Result};
use crate::gradflow::{integrate, integrate_reverse, GFConfig, Params, Sample};
use crate::numeric::sup_norm;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    /// Offset of the reverse-flow starts from each limit, along the normal
    /// of its minima curve.
    pub displacement: f64,
    /// Reverse flows stop once `‖θ‖_∞` exceeds this (raised automatically
    /// above the limits' own norms).
    pub escape_norm: f64,
    pub max_record_step: f64,
    pub t_max: f64,
    /// Backward curves must come this close to count as crossing.
    pub match_tol: f64,
    /// Forward flows from the recovered start must land this close to the
    /// given limits.
    pub forward_tol: f64,
    pub gf: GFConfig,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            displacement: 1e-4,
            escape_norm: 10.0,
            max_record_step: 0.005,
            t_max: 1e4,
            match_tol: 1e-2,
            forward_tol: 1e-3,
            gf: GFConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBackResult {
    pub theta0: Params,
    /// Distance between the two backward curves at `theta0`.
    pub distance: f64,
    /// Displacement sides (`±1`) of the two curves that produced `theta0`.
    pub sides: (i8, i8),
    /// Sup-norm misses of the forward flows from `theta0`.
    pub forward_errors: (f64, f64),
    /// All four backward curves as `(w, a)` polylines: limit 1 on the `+`
    /// and `−` sides, then limit 2.
    pub curves: Vec<Vec<(f64, f64)>>,
}

const CROSSING: f64 = 1e-9;
const BLOCK: usize = 32;

type Pt = (f64, f64);

fn unit_normal(limit: &Params, s: &Sample, act: &Activation) -> Result<Pt> {
    let z = s.pre_activation(limit);
    let n = (limit.a * s.x1() * act.eval(z, 1)?, act.eval(z, 0)?);
    let len = n.0.hypot(n.1);
    if !(len > 0.0) {
        return Err(LabError::DerivativeZero { z });
    }
    Ok((n.0 / len, n.1 / len))
}

fn backward_curve(limit: &Params, s: &Sample, act: &Activation, side: f64, cfg: &TraceConfig) -> Result<Vec<Pt>> {
    let n = unit_normal(limit, s, act)?;
    let start = Params::scalar(limit.w1() + side * cfg.displacement * n.0, limit.a + side * cfg.displacement * n.1);
    let escape = cfg.escape_norm.max(2.0 * sup_norm(&limit.to_vec()) + 1.0);
    let gf =
        GFConfig { diverge_norm: escape, max_record_step: cfg.max_record_step, t_max: cfg.t_max, ..cfg.gf.clone() };
    let tr = integrate_reverse(&start, s, act, &gf)?;
    Ok(tr.states.iter().map(|st| (st.theta.w1(), st.theta.a)).collect())
}

fn point_segment(p: Pt, a: Pt, b: Pt) -> (f64, Pt) {
    let d = (b.0 - a.0, b.1 - a.1);
    let len2 = d.0 * d.0 + d.1 * d.1;
    let t = if len2 > 0.0 { (((p.0 - a.0) * d.0 + (p.1 - a.1) * d.1) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = (a.0 + t * d.0, a.1 + t * d.1);
    ((p.0 - q.0).hypot(p.1 - q.1), q)
}

/// Distance between segments `pq` and `rs` and the midpoint of the closest
/// pair of points.
fn segment_distance(p: Pt, q: Pt, r: Pt, s: Pt) -> (f64, Pt) {
    let d1 = (q.0 - p.0, q.1 - p.1);
    let d2 = (s.0 - r.0, s.1 - r.1);
    let den = d1.0 * d2.1 - d1.1 * d2.0;
    if den != 0.0 {
        let e = (r.0 - p.0, r.1 - p.1);
        let t = (e.0 * d2.1 - e.1 * d2.0) / den;
        let u = (e.0 * d1.1 - e.1 * d1.0) / den;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            return (0.0, (p.0 + t * d1.0, p.1 + t * d1.1));
        }
    }
    let mut best = (f64::INFINITY, p);
    for (pt, a, b) in [(p, r, s), (q, r, s), (r, p, q), (s, p, q)] {
        let (d, c) = point_segment(pt, a, b);
        if d < best.0 {
            best = (d, ((pt.0 + c.0) / 2.0, (pt.1 + c.1) / 2.0));
        }
    }
    best
}

fn boxes(c: &[Pt]) -> Vec<(usize, usize, [f64; 4])> {
    let segs = c.len().saturating_sub(1);
    (0..segs)
        .step_by(BLOCK)
        .map(|start| {
            let end = (start + BLOCK).min(segs);
            let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
            for p in &c[start..=end] {
                b = [b[0].min(p.0), b[1].max(p.0), b[2].min(p.1), b[3].max(p.1)];
            }
            (start, end, b)
        })
        .collect()
}

fn box_gap(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let dx = (a[0] - b[1]).max(b[0] - a[1]).max(0.0);
    let dy = (a[2] - b[3]).max(b[2] - a[3]).max(0.0);
    dx.hypot(dy)
}

/// Closest approach of two polylines plus every crossing point.
fn closest_approach(c1: &[Pt], c2: &[Pt]) -> ((f64, Pt), Vec<Pt>) {
    let mut best = (f64::INFINITY, (f64::NAN, f64::NAN));
    let mut crossings = Vec::new();
    let (b1, b2) = (boxes(c1), boxes(c2));
    for (s1, e1, bx1) in &b1 {
        for (s2, e2, bx2) in &b2 {
            if box_gap(bx1, bx2) > best.0.max(CROSSING) {
                continue;
            }
            for i in *s1..*e1 {
                for j in *s2..*e2 {
                    let (d, p) = segment_distance(c1[i], c1[i + 1], c2[j], c2[j + 1]);
                    if d < CROSSING {
                        crossings.push(p);
                    }
                    if d < best.0 {
                        best = (d, p);
                    }
                }
            }
        }
    }
    (best, crossings)
}

/// Recovers a common start for two flows from their limits by following
/// both flows backwards in time from points displaced off each limit and
/// locating where the backward curves meet.
///
/// All four side combinations are searched. When the curves cross more than
/// once, the crossing nearest the midpoint of the two limits is returned;
/// otherwise the point of closest approach.
pub fn trace_back_search(
    limit1: &Params,
    limit2: &Params,
    s1: &Sample,
    s2: &Sample,
    act: &Activation,
    cfg: &TraceConfig,
) -> Result<TraceBackResult> {
    for p in [limit1, limit2] {
        if p.w.len() != 1 {
            return Err(LabError::Dimension { expected: 1, got: p.w.len() });
        }
    }
    let sides = [1.0, -1.0];
    let mut curves = Vec::with_capacity(4);
    for (limit, s) in [(limit1, s1), (limit2, s2)] {
        for side in sides {
            curves.push(backward_curve(limit, s, act, side, cfg)?);
        }
    }
    let mid = ((limit1.w1() + limit2.w1()) / 2.0, (limit1.a + limit2.a) / 2.0);
    let dist_mid = |p: &Pt| (p.0 - mid.0).hypot(p.1 - mid.1);
    let mut best: Option<(f64, Pt, (i8, i8))> = None;
    let mut crossing: Option<(Pt, (i8, i8))> = None;
    for i in 0..2 {
        for j in 0..2 {
            let tag = (sides[i] as i8, sides[j] as i8);
            let ((d, p), xs) = closest_approach(&curves[i], &curves[2 + j]);
            if best.is_none_or(|b| d < b.0) {
                best = Some((d, p, tag));
            }
            for x in xs {
                if crossing.is_none_or(|(c, _)| dist_mid(&x) < dist_mid(&c)) {
                    crossing = Some((x, tag));
                }
            }
        }
    }
    let (distance, point, tag) = match (crossing, best) {
        (Some((p, tag)), _) => (0.0, p, tag),
        (None, Some(b)) => b,
        (None, None) => (f64::INFINITY, (f64::NAN, f64::NAN), (0, 0)),
    };
    if !(distance <= cfg.match_tol) {
        return Err(LabError::NoCrossing { distance });
    }
    let theta0 = Params::scalar(point.0, point.1);
    let mut errors = [0.0; 2];
    for (k, (s, target)) in [(s1, limit1), (s2, limit2)].into_iter().enumerate() {
        let tr = integrate(&theta0, s, act, &cfg.gf)?;
        let Some(limit) = tr.limit else {
            return Err(LabError::NonConvergence { index: k + 1, status: tr.status.to_string() });
        };
        errors[k] = limit.dist_sup(target);
        if !(errors[k] <= cfg.forward_tol) {
            return Err(LabError::ForwardMismatch { error: errors[k] });
        }
    }
    Ok(TraceBackResult { theta0, distance, sides: tag, forward_errors: (errors[0], errors[1]), curves })
}
