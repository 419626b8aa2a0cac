//! Fixed-step simulation of the three series modules, their LLC links, the
//! shared dc link and the AFE, plus steady-state analysis of the result.
//!
//! The line of each phase is one series RL loop advanced by the trapezoidal
//! rule. Module and link capacitors are advanced in energy form, so the run
//! closes an exact energy balance (see [`EnergyAudit`]). In averaged fidelity
//! the bridge produces `duty·v_dc`; in switched fidelity it produces the
//! unipolar PWM levels, with the control sampled once per carrier period.

mod compare;
mod engine;
mod metrics;
mod trace;

pub use compare::{compare_to_analytic, IntervalComparison, PhaseComparison};
pub use engine::{run, EnergyAudit, RunOutput};
pub use metrics::{
    compute_metrics, IntervalMetrics, PhaseMetrics, RunMetrics, SETTLED_ANGLE_DEG, SETTLE_BAND, SETTLE_FLOOR,
    STEADY_CYCLES, THD_MAX_ORDER,
};
pub use trace::{PhaseTrace, TraceSet};
