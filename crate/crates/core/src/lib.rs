//! Modelling toolkit for a self-sustained electrothermal oscillator built from
//! two thermally actuated self-opening switches that share one bistable
//! buckled beam.
//!
//! * [`model`] holds the domain types and the closed-form period model.
//! * [`thermal`] is the lumped first-order actuator model.
//! * [`beam`] builds a continuous force-displacement curve from the beam's
//!   critical snap characteristics.
//! * [`simulator`] is an event-driven hybrid simulation of the coupled system.
//! * [`calibration`] fits thermal parameters to period-vs-current data.
//! * [`io`] reads and writes the CSV formats used by the command-line tool.
//!
//! Units are fixed throughout: mm, N, °C, s, A, Ω, W.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod calibration;
pub mod error;
pub mod hermite;
pub mod io;
pub mod model;
pub mod root;
pub mod simulator;
pub mod thermal;

pub use beam::{build_beam_curve, BeamCurve, Branch};
pub use calibration::{
    fit_thermal_params, infer_conductivity, model_residuals, FitOptions, FitResult, PeriodDataset,
    PeriodPoint, ThermalParams,
};
pub use error::{Error, Result};
pub use model::{
    design_current, equilibrium_temperature_rise, min_current, oscillation_period, pull_time,
    scale_actuator, snap_delta_temperature, snap_force_budget, ActuatorParams, BeamCharacteristics,
    DesignPoint, Direction, Environment, OscillatorConfig, PeriodEstimate, PeriodModel,
};
pub use simulator::{
    export_pattern_timeline, measure_period, run, Equilibrium, OscillatorState, PatternTimeline,
    RunOptions, RunSummary, Simulator, SnapEvent, Trace, TraceRow,
};
pub use thermal::{actuator_force, cooling_time, temperature_step, ActuatorThermalState, Side};
