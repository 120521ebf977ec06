//! Piecewise activations: restricted builtins on disjoint closed segments,
//! Hermite blends across the gaps, and isolated point redefinitions.

use super::hermite::{monotone_c1, Poly};
use super::Activation;
use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};

/// `z ↦ base(scale·z)` on the closed interval `[lo, hi]`. Ends may be
/// infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub lo: f64,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub hi: f64,
    pub base: Activation,
    #[serde(default = "unit")]
    pub scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl Segment {
    pub fn new(lo: f64, hi: f64, base: Activation) -> Self {
        Segment { lo, hi, base, scale: 1.0 }
    }

    pub fn scaled(lo: f64, hi: f64, base: Activation, scale: f64) -> Self {
        Segment { lo, hi, base, scale }
    }

    pub fn contains(&self, z: f64) -> bool {
        self.lo <= z && z <= self.hi
    }

    fn eval(&self, z: f64, order: u8) -> Result<f64> {
        Ok(self.base.eval(self.scale * z, order)? * self.scale.powi(order as i32))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exception {
    pub z: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlendMode {
    /// Blends must preserve monotonicity of the endpoint data.
    #[default]
    Monotone,
    /// Plain Hermite blends, no shape constraint.
    Plain,
}

/// Serialized form of a piecewise activation; blends are rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub exceptions: Vec<Exception>,
    pub smoothness: u8,
    #[serde(default)]
    pub blend_mode: BlendMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseSpec", into = "PiecewiseSpec")]
pub struct PiecewiseActivation {
    spec: PiecewiseSpec,
    blends: Vec<Vec<Poly>>,
}

impl TryFrom<PiecewiseSpec> for PiecewiseActivation {
    type Error = LabError;

    fn try_from(spec: PiecewiseSpec) -> Result<Self> {
        PiecewiseActivation::with_mode(spec.segments, spec.exceptions, spec.smoothness, spec.blend_mode)
    }
}

impl From<PiecewiseActivation> for PiecewiseSpec {
    fn from(p: PiecewiseActivation) -> Self {
        p.spec
    }
}

/// Builds a piecewise activation with monotone blends.
pub fn make_piecewise(
    segments: Vec<Segment>,
    exceptions: Vec<Exception>,
    smoothness: u8,
) -> Result<PiecewiseActivation> {
    PiecewiseActivation::new(segments, exceptions, smoothness)
}

impl PiecewiseActivation {
    pub fn new(segments: Vec<Segment>, exceptions: Vec<Exception>, smoothness: u8) -> Result<Self> {
        Self::with_mode(segments, exceptions, smoothness, BlendMode::Monotone)
    }

    pub fn with_mode(
        mut segments: Vec<Segment>,
        mut exceptions: Vec<Exception>,
        smoothness: u8,
        blend_mode: BlendMode,
    ) -> Result<Self> {
        if !(1..=2).contains(&smoothness) {
            return Err(LabError::InvalidInput(format!("piecewise smoothness must be 1 or 2, got {smoothness}")));
        }
        if segments.is_empty() {
            return Err(LabError::InvalidInput("piecewise activation needs a segment".into()));
        }
        for s in &segments {
            if s.lo.is_nan() || s.hi.is_nan() || s.lo >= s.hi {
                return Err(LabError::InvalidInput(format!("bad segment interval [{}, {}]", s.lo, s.hi)));
            }
            if !s.base.is_builtin() {
                return Err(LabError::InvalidInput("segment bases must be builtin activations".into()));
            }
            if !s.scale.is_finite() || s.scale == 0.0 {
                return Err(LabError::InvalidInput(format!("bad segment scale {}", s.scale)));
            }
        }
        segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in segments.windows(2) {
            if w[0].hi >= w[1].lo {
                return Err(LabError::Overlap { at: w[1].lo });
            }
        }
        exceptions.sort_by(|a, b| a.z.total_cmp(&b.z));
        for e in &exceptions {
            if !e.z.is_finite() || !e.value.is_finite() {
                return Err(LabError::InvalidInput(format!("non-finite exception ({}, {})", e.z, e.value)));
            }
            if segments.iter().any(|s| s.contains(e.z)) {
                return Err(LabError::Overlap { at: e.z });
            }
        }
        for w in exceptions.windows(2) {
            if w[0].z == w[1].z {
                return Err(LabError::InvalidInput(format!("duplicate exception at {}", w[0].z)));
            }
        }
        let mut blends = Vec::with_capacity(segments.len() - 1);
        for w in segments.windows(2) {
            blends.push(build_blend(&w[0], &w[1], smoothness, blend_mode)?);
        }
        Ok(PiecewiseActivation { spec: PiecewiseSpec { segments, exceptions, smoothness, blend_mode }, blends })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.spec.segments
    }

    pub fn exceptions(&self) -> &[Exception] {
        &self.spec.exceptions
    }

    pub fn smoothness(&self) -> u8 {
        self.spec.smoothness
    }

    pub fn blend_mode(&self) -> BlendMode {
        self.spec.blend_mode
    }

    pub fn spec(&self) -> &PiecewiseSpec {
        &self.spec
    }

    /// Open gaps bridged by blends.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.spec.segments.windows(2).map(|w| (w[0].hi, w[1].lo)).collect()
    }

    /// Every point where the definition switches formula: finite segment
    /// ends and the inner knots of each blend.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = Vec::new();
        for s in &self.spec.segments {
            k.extend([s.lo, s.hi].into_iter().filter(|v| v.is_finite()));
        }
        for b in &self.blends {
            k.extend(b.iter().skip(1).map(|p| p.z0));
        }
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    pub fn is_exception(&self, z: f64) -> bool {
        self.spec.exceptions.binary_search_by(|e| e.z.total_cmp(&z)).is_ok()
    }

    pub fn eval(&self, z: f64, order: u8) -> Result<f64> {
        if order > self.spec.smoothness {
            return Err(LabError::Smoothness { z, order, reason: "order exceeds the activation smoothness" });
        }
        if let Ok(i) = self.spec.exceptions.binary_search_by(|e| e.z.total_cmp(&z)) {
            if order > 0 {
                return Err(LabError::Smoothness { z, order, reason: "derivative requested at an exception point" });
            }
            return Ok(self.spec.exceptions[i].value);
        }
        let segs = &self.spec.segments;
        let i = segs.partition_point(|s| s.lo <= z);
        if i == 0 {
            return segs[0].eval(z, order);
        }
        let seg = &segs[i - 1];
        if z <= seg.hi || i == segs.len() {
            return seg.eval(z, order);
        }
        let pieces = &self.blends[i - 1];
        let j = pieces.partition_point(|p| p.z1 < z).min(pieces.len() - 1);
        Ok(pieces[j].eval(z, order))
    }
}

fn build_blend(left: &Segment, right: &Segment, smoothness: u8, mode: BlendMode) -> Result<Vec<Poly>> {
    let (z0, z1) = (left.hi, right.lo);
    let v = [left.eval(z0, 0)?, right.eval(z1, 0)?];
    let d = [left.eval(z0, 1)?, right.eval(z1, 1)?];
    let fail = |reason: String| LabError::Blend { lo: z0, hi: z1, reason };
    if smoothness == 2 {
        let s = [left.eval(z0, 2)?, right.eval(z1, 2)?];
        let q = Poly::quintic(z0, z1, v, d, s);
        if mode == BlendMode::Monotone {
            let sign = monotone_sign(v, d).ok_or_else(|| fail(non_monotone(v, d)))?;
            for i in 0..=256 {
                let z = z0 + (z1 - z0) * i as f64 / 256.0;
                if sign * q.eval(z, 1) < 0.0 {
                    return Err(fail(format!("quintic blend changes direction near {z}")));
                }
            }
        }
        return Ok(vec![q]);
    }
    match mode {
        BlendMode::Plain => Ok(vec![Poly::cubic(z0, z1, v[0], v[1], d[0], d[1])]),
        BlendMode::Monotone => {
            let sign = monotone_sign(v, d).ok_or_else(|| fail(non_monotone(v, d)))?;
            if sign == 0.0 {
                return Ok(vec![Poly::cubic(z0, z1, v[0], v[1], 0.0, 0.0)]);
            }
            let pieces = monotone_c1(z0, z1, sign * v[0], sign * v[1], sign * d[0], sign * d[1]);
            Ok(pieces
                .into_iter()
                .map(|mut p| {
                    p.coeffs.iter_mut().for_each(|c| *c *= sign);
                    p
                })
                .collect())
        }
    }
}

/// +1 for increasing data, −1 for decreasing, 0 for flat, `None` when the
/// endpoint data admit no monotone interpolant.
fn monotone_sign(v: [f64; 2], d: [f64; 2]) -> Option<f64> {
    let dv = v[1] - v[0];
    if dv > 0.0 && d[0] >= 0.0 && d[1] >= 0.0 {
        Some(1.0)
    } else if dv < 0.0 && d[0] <= 0.0 && d[1] <= 0.0 {
        Some(-1.0)
    } else if dv == 0.0 && d[0] == 0.0 && d[1] == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

fn non_monotone(v: [f64; 2], d: [f64; 2]) -> String {
    format!("endpoint values {:?} and slopes {:?} are not monotone-compatible", v, d)
}
