use num_complex::Complex64;
use thiserror::Error;

/// Every failure the core library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Pade order {order} outside supported range {min}..={max}")]
    OrderOutOfRange {
        order: usize,
        min: usize,
        max: usize,
    },

    #[error("degenerate loop: 1 + forward path is identically zero")]
    DegenerateLoop,

    #[error("evaluation at omega = {omega} hits a pole on the imaginary axis")]
    PoleOnAxis { omega: f64 },

    #[error("improper system: numerator degree exceeds denominator degree by {excess}")]
    Improper { excess: usize },

    #[error("system is not strictly proper")]
    NotStrictlyProper,

    #[error(
        "integration step dt = {dt} too large for spectral radius {spectral_radius:.4e}; \
         use dt <= {suggested_dt:.4e}"
    )]
    UnstableIntegration {
        dt: f64,
        spectral_radius: f64,
        suggested_dt: f64,
    },

    #[error("unknown benchmark {id:?}; valid ids are {valid}")]
    NotFound { id: String, valid: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid gains: {0}")]
    InvalidGains(String),

    #[error("no stable region: no sampled design point stabilizes the plant")]
    NoStableRegion,

    #[error("non-convex region: centroid gains are unstable (max real part {max_real_part:.6e})")]
    NonConvexRegion { max_real_part: f64 },

    #[error("unstable system; offending poles: {}", fmt_poles(.poles))]
    Unstable { poles: Vec<Complex64> },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank-deficient design matrix; dependent columns: {}", .columns.join(", "))]
    Collinear { columns: Vec<String> },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("parse error: {0}")]
    Parse(String),
}

fn fmt_poles(poles: &[Complex64]) -> String {
    poles
        .iter()
        .map(|p| format!("{:.6}{:+.6}j", p.re, p.im))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
