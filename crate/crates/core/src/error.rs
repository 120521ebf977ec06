use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("argument {z} lies outside the activation domain")]
    Domain { z: f64 },

    #[error("derivative of order {order} unavailable at {z}: {reason}")]
    Smoothness { z: f64, order: u8, reason: &'static str },

    #[error("segment intervals overlap or touch near {at}")]
    Overlap { at: f64 },

    #[error("cannot blend monotonically across ({lo}, {hi}): {reason}")]
    Blend { lo: f64, hi: f64, reason: String },

    #[error("step size underflow at t = {t}, theta = {theta:?}")]
    StepFailure { t: f64, theta: Vec<f64> },

    #[error("activation not supported here: {0}")]
    UnsupportedActivation(String),

    #[error("trajectory did not converge (status {0})")]
    NotConverged(String),

    #[error("terminal direction unstable: angular change {angle} rad")]
    UnstableDirection { angle: f64 },

    #[error("value {value} outside the reachable range of h")]
    Range { value: f64 },

    #[error("no sign change of phi found on [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("derivative vanishes at {z}")]
    DerivativeZero { z: f64 },

    #[error("target output weight equals the initial one")]
    EqualOutputWeights,

    #[error("target unreachable from the initial point: {0}")]
    UnreachableTarget(String),

    #[error("flow {index} did not converge (status {status})")]
    NonConvergence { index: usize, status: String },

    #[error("flow {index} limit is {distance} away from the common limit")]
    LimitMismatch { index: usize, distance: f64 },

    #[error("initial output weight is zero")]
    ZeroOutputWeight,

    #[error("recipe step {step} failed: {detail}")]
    ConstraintFailure { step: usize, detail: String },

    #[error("backward curves never approach closer than {distance}")]
    NoCrossing { distance: f64 },

    #[error("forward flow from the recovered start misses its limit by {error}")]
    ForwardMismatch { error: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
