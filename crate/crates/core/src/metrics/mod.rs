//! Closed-loop sensitivities, system and signal norms, margins and the
//! eleven-metric report.

mod invariance;
mod margins;
mod norms;
mod report;
mod sensitivity;

pub use invariance::{pade_invariance, InvarianceStudy, InvarianceSummary, OrderResponse};
pub use margins::{
    loop_margins, loop_phase, margins, pid_loop, DelayTreatment, LoopResponse, Margins,
};
pub use norms::{
    h2_lyapunov, h2_norm, h2_quadrature, hinf_norm, hinf_peak, require_stable, H2_AGREEMENT,
};
pub use report::{
    control_signal_norms, correlation_matrix, effort_norms, performance_report,
    performance_reports, ControlSignalNorms, PerformanceReport, SimulationConfig, METRIC_NAMES,
};
pub use sensitivity::{Sensitivity, SensitivitySet};
