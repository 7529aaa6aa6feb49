//! Robust switching control toolkit for a DC-DC boost converter feeding an
//! uncertain load from an uncertain source.
//!
//! The crate covers the full pipeline:
//!
//! - [`model`]: the switched affine converter model, its averaged form and
//!   equilibrium targets.
//! - [`synthesis`]: offline design. A common quadratic Lyapunov matrix over
//!   the input-voltage range via vertex inequalities, estimator gain
//!   placement, and the hysteresis width for a given switching-frequency
//!   target.
//! - [`controller`]: the online argmin switching law with a hysteresis
//!   band and per-sample target updates.
//! - [`estimator`]: reconstruction of the input voltage and load current
//!   from state measurements and the active mode, with an optional
//!   first-order filter cascade for noise suppression.
//! - [`sim`] / [`trace`]: fixed-step closed-loop simulation, measurement
//!   noise generation, trace logging and window metrics.
//! - [`scenarios`]: the step-perturbation and PV/battery test scenarios.
//! - [`config`]: one flat configuration table tying it all together.

pub mod config;
pub mod controller;
pub mod estimator;
pub mod mat2;
pub mod model;
pub mod scenarios;
pub mod sim;
pub mod synthesis;
pub mod trace;

pub use config::{DesignArtifacts, ToolConfig};
pub use controller::ControllerState;
pub use estimator::{EstimatorState, MeasuredState, Variant};
pub use mat2::Mat2;
pub use model::{
    compute_equilibrium, CircuitParams, Equilibrium, Mode, ParamVec, StateVec, SwitchedModel,
};
pub use scenarios::{scenario_by_name, scenario_s1, scenario_s2, scenario_s3, IrradianceTrace, Scenario};
pub use sim::{
    integrate_step, measure_switching_frequency, run_closed_loop, steady_state_metrics, SimConfig,
    SimError, SteadyStateMetrics,
};
pub use synthesis::{
    alpha_bar, design_estimator_gain, hysteresis_width, lmi_slack, solve_common_lyapunov,
    EstimatorGains, ExoSystem, LyapunovCertificate,
};
pub use trace::SimTrace;
