//! Overlap constructions and their verification.
//!
//! * Two-point overlap: one start `θ₀`, two samples whose flows end at two
//!   distinct points, each lying on both minima curves.
//! * One-point overlap: several samples whose flows from `θ₀` share one
//!   limit but arrive along independent directions.
//!
//! Recipe A builds an exponential-activation sample steering the flow to a
//! chosen target; recipe B repeats the construction with a piecewise
//! activation so that several targets pair up through shared minima.

mod one_point;
mod part_a;
mod part_b;
mod trace_back;
mod two_point;

pub use one_point::{
    limiting_direction_formula, line_angle, one_point_samples, verify_one_point, OnePointDegeneracy, OnePointReport,
    ANGLE_THRESHOLD,
};
pub use part_a::recipe_a_sample;
pub use part_b::{recipe_b_run, replay_recipe_b, EInterval, RecipeBConfig, RecipeBMode, RecipeBState, StepRecord};
pub use trace_back::{trace_back_search, TraceBackResult, TraceConfig};
pub use two_point::{certify_two_point, verify_two_point, TwoPointReport};
