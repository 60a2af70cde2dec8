//! Robust PID synthesis for second-order-plus-time-delay plants by dominant
//! pole placement, Monte Carlo stability regions and centroid selection.

// `!(x < y)` is used on purpose so NaN lands on the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod error;
pub mod explorer;
pub mod metrics;
pub mod pade;
pub mod placement;
pub mod plant;
pub mod polytf;
pub mod rng;
pub mod robustness;
pub mod rules;
pub mod stats;

pub use cluster::RobustGains;
pub use error::{Error, Result};
pub use metrics::{PerformanceReport, SimulationConfig};
pub use num_complex::Complex64;
pub use placement::{DesignSpec, KpSource, NonDominantPoleType, PidGains};
pub use plant::{BenchmarkId, SoptdModel};
pub use polytf::{Polynomial, RationalTF};
