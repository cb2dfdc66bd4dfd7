//! Closed-loop simulator for periodic event-triggered, prescribed-time,
//! state/input-constrained adaptive barrier control of Euler-Lagrange systems,
//! plus an analytic bound calculator (minimum inter-event time, monitoring-period
//! ceiling, prescribed tracking bound) and post-run evaluation metrics.
//!
//! The crate is organised around the control pipeline:
//!
//! * [`tbg`] - time-based generator polynomials shaping the initial error to
//!   vanish at the prescribed settling time.
//! * [`plant`] - Euler-Lagrange dynamics, constraint boxes, disturbances and
//!   reference trajectories.
//! * [`controller`] - the adaptive barrier control law with input saturation
//!   and the state-constraint envelope.
//! * [`trigger`] - periodic/continuous event-triggering with zero-order hold.
//! * [`bounds`] - analytic constants derived from plant and gain data.
//! * [`sim`] - fixed-step RK4 closed-loop engine with full telemetry.
//! * [`metrics`] - steady-state RMSE, inter-event statistics, Lyapunov checks.
//! * [`config`] / [`report`] - scenario files and CSV/plot artifacts.

// Validation deliberately writes `!(v > 0.0)` so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod controller;
pub mod error;
pub mod metrics;
pub mod plant;
pub mod report;
pub mod sim;
pub mod tbg;
pub mod trigger;

/// n-dimensional vector of joint-space quantities (rad, rad/s or N.m).
pub type JointVector = nalgebra::DVector<f64>;
/// Dense square matrix in joint space.
pub type JointMatrix = nalgebra::DMatrix<f64>;

pub use error::{Error, Result};
