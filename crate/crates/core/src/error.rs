use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what}: argument {value} outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("cubic branch {branch} unavailable at z = {z}: {reason}")]
    Branch {
        branch: &'static str,
        z: f64,
        reason: &'static str,
    },

    #[error("fold point of the cubic at U = {u} (3U^2 - 1 = {gap:e})")]
    FoldPoint { u: f64, gap: f64 },

    #[error("degenerate Whitham triple ({l1}, {l2}, {l3}): {reason}")]
    Degenerate {
        l1: f64,
        l2: f64,
        l3: f64,
        reason: &'static str,
    },

    #[error("pole of {what} at z = {z}, R = {r}")]
    Pole { what: &'static str, z: f64, r: f64 },

    #[error("Newton solve at z = {z} failed after {iterations} iterations (residual {residual:e})")]
    Convergence {
        z: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("ordering l1 <= l2 <= l3 could not be kept at z = {z}")]
    Ordering { z: f64 },

    #[error("z = {z} lies outside the oscillation zone ({lead}, {trail})")]
    OutOfZone { z: f64, lead: f64, trail: f64 },

    #[error("continuation failed at z = {z}: {source}")]
    Continuation {
        z: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("boundary-value Newton at t = {t} hit the iteration cap {iterations} (residual {residual:e})")]
    NonConvergence {
        t: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("boundary-value Newton at t = {t}: damping fell below 1e-6 (residual {residual:e})")]
    StepCollapse { t: f64, residual: f64 },

    #[error("singular Jacobian at t = {t} (pivot column {column})")]
    SingularJacobian { t: f64, column: usize },

    #[error("continuation in t stalled at t = {t} on the way to {target}: {source}")]
    TimeContinuation {
        t: f64,
        target: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fit window [{lo}, {hi}]: {reason}")]
    Window { lo: f64, hi: f64, reason: String },

    #[error("only {per_period:.2} samples per oscillation period (need at least {needed})")]
    Undersampled { per_period: f64, needed: f64 },

    #[error("{path}: {reason}")]
    Io { path: String, reason: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
