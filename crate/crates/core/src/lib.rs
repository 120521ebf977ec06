#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Gradient-flow laboratory for one-hidden-neuron networks trained on a
//! single sample with squared loss.
//!
//! The model is `f(θ, x) = a·σ(xᵀw)` with `θ = (w, a)`. The crate integrates
//! the gradient flow `θ̇ = −∇L`, predicts its limit independently through the
//! conserved potential of the flow, computes global-minima curves and their
//! intersections, and builds the two-point and one-point overlap
//! constructions that show a flow limit cannot always be singled out by a
//! function of `(θ, θ₀)` alone.
//!
//! Module map:
//!
//! * [`activation`]: builtin and piecewise activations, their reciprocals.
//! * [`gradflow`]: loss, gradient, adaptive integration, conserved quantities.
//! * [`minima`]: minima curves, curve intersections, overlap determinant.
//! * [`limits`]: potential `h`, root function `φ`, limit prediction.
//! * [`recipes`]: overlap constructions and their verification reports.

pub mod activation;
pub mod error;
pub mod gradflow;
pub mod limits;
pub mod minima;
pub mod numeric;
pub mod recipes;
mod serde_ext;

pub use activation::{Activation, PiecewiseActivation, Segment};
pub use error::{LabError, Result};
pub use gradflow::{GFConfig, Params, Sample, Status, Trajectory};
