//! Staggered Lagrangian finite-difference solver for the one-dimensional
//! compressible Navier-Stokes equations with density-dependent viscosity
//! `mu(rho) = rho^alpha`, including initial data with vacuum.
//!
//! The library is generic over the scalar type; `f64` and `f32` aliases are
//! provided at the crate root.

// negated comparisons are used deliberately so that NaN fails every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod coords;
pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod params;
pub mod scalar;
pub mod scenarios;
pub mod scheme;
pub mod state;

pub use convergence::{convergence_report, final_states, l1_difference, restrict, run_levels, ConvergenceReport};
pub use coords::{eulerian_to_lagrangian, lagrangian_to_eulerian, particle_path, ParticleTrajectory};
pub use diagnostics::{
    blowup_indicator, decay_fit, envelope_fit, g_functional, sample, vacuum_vanish_time, velocity_gradient_field,
    BlowupIndicator, DecayFit, DiagnosticsConfig, DiagnosticsRecord, EnvelopeFit,
};
pub use error::{Error, Result};
pub use integrator::{run, stable_dt, step, IntegratorConfig, Method, RunOutput, Termination, TerminationKind};
pub use params::{
    exponent_window, mu_eps, pi_fn, specific_entropy, validate_params, ExponentWindow, ModelParams,
};
pub use scalar::Scalar;
pub use scenarios::{
    build_initial_state, ic_piece_vacuum, ic_point_vacuum, preset, presets, project_to_grid, regularize_ic,
    PresetName, ScenarioKind, ScenarioSpec, VelocityInit,
};
pub use scheme::{momentum_identity_residual, rhs, StateDerivative};
pub use state::{BoundaryCondition, EulerianField, StaggeredState};

pub type State64 = StaggeredState<f64>;
pub type Field64 = EulerianField<f64>;
pub type Params64 = ModelParams<f64>;
pub type Integrator64 = IntegratorConfig<f64>;
pub type Record64 = DiagnosticsRecord<f64>;
pub type Output64 = RunOutput<f64>;
pub type Scenario64 = ScenarioSpec<f64>;

pub type State32 = StaggeredState<f32>;
pub type Field32 = EulerianField<f32>;
pub type Params32 = ModelParams<f32>;
pub type Integrator32 = IntegratorConfig<f32>;
pub type Record32 = DiagnosticsRecord<f32>;
pub type Output32 = RunOutput<f32>;
pub type Scenario32 = ScenarioSpec<f32>;
