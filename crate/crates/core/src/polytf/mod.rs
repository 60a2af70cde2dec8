//! Polynomials, rational transfer functions, roots, realization and simulation.

mod polynomial;
mod rational;
mod roots;
mod statespace;

pub use polynomial::{poly_mul, Polynomial};
pub use rational::{feedback_unity, freq_response, RationalTF};
pub use roots::{cluster_roots, max_real_part, roots, CLUSTER_LINK_RADIUS, ROOT_RESIDUAL_BOUND};
pub use statespace::{realize, simulate, Input, Simulation, StateSpace, RK4_STABILITY_LIMIT};
