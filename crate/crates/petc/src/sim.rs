//! Fixed-step closed-loop simulation engine.
//!
//! Integrates the augmented state (q, q_dot, chi) with classical RK4 under
//! zero-order-hold control. The trigger is evaluated before integration at
//! each monitoring instant (measure, decide, hold, integrate); the held
//! torque and the disturbance sample are frozen across RK4 substages, while
//! the auxiliary-state derivative re-evaluates the filtered error at substage
//! times and states.

use std::sync::Arc;

use rayon::prelude::*;

use crate::bounds::{self, BoundInputs, BoundSet};
use crate::controller::{self, ControllerGains, ControllerState};
use crate::plant::{ConstraintBox, DisturbanceSpec, ElPlant, ReferenceTrajectory};
use crate::tbg::{self, TbgParams};
use crate::trigger::{Event, TriggerConfig, TriggerState};
use crate::{Error, JointMatrix, JointVector, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub q0: JointVector,
    pub v0: JointVector,
    /// Telemetry row decimation; 1 records every step.
    pub record_stride: usize,
}

impl SimConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::config("sim.dt_s: must be > 0"));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::config("sim.t_end_s: must be > 0"));
        }
        if self.record_stride == 0 {
            return Err(Error::config("sim.record_stride: must be >= 1"));
        }
        if self.q0.len() != n || self.v0.len() != n {
            return Err(Error::config(format!("sim initial state: expected dimension {n}")));
        }
        Ok(())
    }
}

/// Everything needed to execute one closed-loop run.
#[derive(Clone)]
pub struct Scenario {
    pub plant: Arc<dyn ElPlant>,
    pub cbox: ConstraintBox,
    pub reference: ReferenceTrajectory,
    pub disturbance: DisturbanceSpec,
    pub gains: ControllerGains,
    pub trigger: TriggerConfig,
    pub sim: SimConfig,
    /// Saturation scaling estimate for the bound chain.
    pub bound_r: f64,
    /// Grid resolution for property-constant sampling.
    pub grid_points: usize,
    /// Velocity directions for the Coriolis ratio estimate.
    pub velocity_directions: usize,
}

impl Scenario {
    /// Cross-field validation with named errors.
    pub fn validate(&self) -> Result<()> {
        let n = self.plant.dof();
        self.cbox.validate(n)?;
        self.sim.validate(n)?;
        self.gains.validate(n, &self.cbox)?;
        self.trigger.validate(self.sim.dt)?;
        if self.reference.dof() != n {
            return Err(Error::config(format!("reference: expected dimension {n}")));
        }
        if self.disturbance.dof() != n {
            return Err(Error::config(format!("disturbance: expected dimension {n}")));
        }
        if !(self.bound_r > 0.0 && self.bound_r <= 1.0) {
            return Err(Error::config("bounds.r: must lie in (0, 1]"));
        }
        if !self.cbox.contains_state(&self.sim.q0, &self.sim.v0) {
            return Err(Error::config("sim initial state: outside the constraint box"));
        }
        self.reference
            .check_feasibility(&self.cbox, self.sim.t_end, 10_000)?;
        Ok(())
    }

    pub fn tbg_params(&self) -> Result<TbgParams> {
        TbgParams::new(self.trigger.prescribed_time)
    }

    /// Assembles the bound-chain inputs by grid sampling the plant and
    /// trajectory and latching the initial errors of this scenario.
    pub fn bound_inputs(&self) -> Result<BoundInputs> {
        let props = crate::plant::property_bounds(
            self.plant.as_ref(),
            &self.cbox,
            self.grid_points,
            self.velocity_directions,
        );
        let (_, qr1, qr2) = self.reference.norm_bounds(self.sim.t_end, 10_000);
        let params = self.tbg_params()?;
        let (q_r0, qd_r0, _) = self.reference.eval(0.0);
        let e0 = &self.sim.q0 - q_r0;
        let e0_dot = &self.sim.v0 - qd_r0;
        let (er1, er2) = bounds::tbg_offset_maxima(&e0, &e0_dot, &params, 10_000);
        Ok(BoundInputs {
            m_hi: props.m_hi,
            l_hi: props.l_hi,
            c_bar: props.c_bar,
            g_bar: props.g_bar,
            f_bar: props.f_bar,
            d_bar: self.disturbance.bound(),
            qr1,
            qr2,
            er1,
            er2,
            k_min: self.gains.k_min(),
            k_max: self.gains.k_max(),
            rho: self.gains.rho,
            omega: self.gains.omega,
            gamma1: self.gains.gamma1,
            gamma2: self.gains.gamma2,
            u_bar: self.cbox.torque_magnitude(),
            v_bar: self.cbox.velocity_magnitude(),
            prescribed_time: self.trigger.prescribed_time,
            alpha: self.trigger.alpha,
            beta0: self.trigger.beta0,
            r: self.bound_r,
        })
    }

    pub fn bound_set(&self) -> Result<BoundSet> {
        bounds::bound_chain(&self.bound_inputs()?)
    }
}

/// One recorded telemetry row.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub t: f64,
    pub q: JointVector,
    pub q_dot: JointVector,
    pub q_r: JointVector,
    pub qd_r: JointVector,
    pub u: JointVector,
    pub norm_xi: f64,
    pub norm_eps: f64,
    pub pi: f64,
    pub norm_chi: f64,
    pub beta: f64,
    pub fired: bool,
    pub env_feasible: bool,
    /// Lyapunov diagnostic 0.5 xi^T M xi + chi^T chi / (2 gamma1).
    pub lyapunov: f64,
    /// Componentwise state-box membership at this instant.
    pub state_in_box: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Telemetry {
    pub rows: Vec<TelemetryRow>,
}

/// Aggregate facts about a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub n_steps: usize,
    /// Control-evaluation instants (one per simulation step, including t = 0).
    pub n_samples: usize,
    pub n_events: usize,
    pub clamp_count: usize,
    pub state_violation_count: usize,
    pub env_infeasible_count: usize,
    pub max_norm_xi: f64,
    pub max_lyapunov: f64,
    /// max over t >= T of ||[e, e_dot]||.
    pub max_tracking_norm_after_t: f64,
}

pub struct RunOutput {
    pub telemetry: Telemetry,
    pub events: Vec<Event>,
    pub summary: RunSummary,
    /// Candidate control u_c at every step (before the hold), for offline
    /// trigger replay; times are implied by the step index and dt.
    pub control_stream: Vec<JointVector>,
}

fn check_finite(t: f64, what: &str, v: &JointVector) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical {
            t,
            detail: format!("non-finite {what}: {:?}", v.as_slice()),
        });
    }
    Ok(())
}

/// Executes one deterministic closed-loop run.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    scenario.validate()?;
    let n = scenario.plant.dof();
    let params = scenario.tbg_params()?;
    let dt = scenario.sim.dt;
    let n_steps = (scenario.sim.t_end / dt).round() as usize;
    let stride = scenario.trigger.monitor_stride(dt);
    let t_set = scenario.trigger.prescribed_time;

    let (q_r0, qd_r0, _) = scenario.reference.eval(0.0);
    let e0 = &scenario.sim.q0 - &q_r0;
    let e0_dot = &scenario.sim.v0 - &qd_r0;
    let mut ctrl = ControllerState::new(e0, e0_dot);
    let mut trig = TriggerState::new(scenario.trigger.clone());

    let mut q = scenario.sim.q0.clone();
    let mut q_dot = scenario.sim.v0.clone();

    let mut telemetry = Telemetry::default();
    let mut control_stream = Vec::with_capacity(n_steps + 1);
    let mut clamp_count = 0usize;
    let mut state_violation_count = 0usize;
    let mut env_infeasible_count = 0usize;
    let mut max_norm_xi: f64 = 0.0;
    let mut max_lyapunov: f64 = 0.0;
    let mut max_tracking: f64 = 0.0;

    let mut u_held = JointVector::zeros(n);

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        check_finite(t, "joint position", &q)?;
        check_finite(t, "joint velocity", &q_dot)?;
        check_finite(t, "auxiliary state", &ctrl.chi)?;

        // Measure.
        let (q_r, qd_r, _) = scenario.reference.eval(t);
        let e = &q - &q_r;
        let e_dot = &q_dot - &qd_r;
        let (eps, eps_dot) = tbg::transformed_error(&e, &e_dot, &ctrl.e0, &ctrl.e0_dot, t, &params)?;
        let xi = controller::filtered_error(&eps, &eps_dot, &scenario.gains.k_diag);
        let snap = controller::envelope(
            &e,
            &eps,
            t,
            &scenario.cbox,
            &q_r,
            &qd_r,
            &scenario.gains,
            &ctrl.e0,
            &ctrl.e0_dot,
            &params,
        );
        let (tau, pi, clamped) =
            controller::control_raw(&xi, &eps, &eps_dot, &ctrl.chi, &scenario.gains);
        let u_c = controller::saturate(&tau, &scenario.cbox);
        if clamped {
            clamp_count += 1;
        }
        if !snap.feasible {
            env_infeasible_count += 1;
        }
        control_stream.push(u_c.clone());

        // Decide and hold at monitoring instants only.
        let fired = if step % stride == 0 {
            let (applied, fired) = trig.step(&u_c, t)?;
            u_held = applied;
            fired
        } else {
            false
        };

        // Diagnostics.
        let norm_xi = xi.norm();
        let m = scenario.plant.mass_matrix(&q);
        let lyapunov = 0.5 * (xi.transpose() * &m * &xi)[(0, 0)]
            + ctrl.chi.norm_squared() / (2.0 * scenario.gains.gamma1);
        let state_in_box = scenario.cbox.contains_state(&q, &q_dot);
        if !state_in_box {
            state_violation_count += 1;
        }
        max_norm_xi = max_norm_xi.max(norm_xi);
        max_lyapunov = max_lyapunov.max(lyapunov);
        if t >= t_set {
            let tracking = (e.norm_squared() + e_dot.norm_squared()).sqrt();
            max_tracking = max_tracking.max(tracking);
        }

        if step % scenario.sim.record_stride == 0 {
            telemetry.rows.push(TelemetryRow {
                t,
                q: q.clone(),
                q_dot: q_dot.clone(),
                q_r,
                qd_r,
                u: u_held.clone(),
                norm_xi,
                norm_eps: eps.norm(),
                pi,
                norm_chi: ctrl.chi.norm(),
                beta: crate::trigger::beta(t, scenario.trigger.beta0, t_set),
                fired,
                env_feasible: snap.feasible,
                lyapunov,
                state_in_box,
            });
        }

        if step == n_steps {
            break;
        }

        // Integrate with u and d frozen over the step.
        let d = scenario.disturbance.eval(t);
        let (q_next, qd_next, chi_next) = rk4_step_augmented(
            scenario.plant.as_ref(),
            &q,
            &q_dot,
            &ctrl.chi,
            t,
            dt,
            &u_held,
            &d,
            &scenario.reference,
            &ctrl.e0,
            &ctrl.e0_dot,
            &params,
            &scenario.gains,
        )?;
        q = q_next;
        q_dot = qd_next;
        ctrl.chi = chi_next;
    }

    let summary = RunSummary {
        n_steps,
        n_samples: n_steps + 1,
        n_events: trig.events().len(),
        clamp_count,
        state_violation_count,
        env_infeasible_count,
        max_norm_xi,
        max_lyapunov,
        max_tracking_norm_after_t: max_tracking,
    };

    Ok(RunOutput {
        telemetry,
        events: trig.into_events(),
        summary,
        control_stream,
    })
}

/// Derivative of the augmented state (q, q_dot, chi) at substage time/state.
#[allow(clippy::too_many_arguments)]
fn augmented_derivative(
    plant: &dyn ElPlant,
    q: &JointVector,
    q_dot: &JointVector,
    chi: &JointVector,
    t: f64,
    u: &JointVector,
    d: &JointVector,
    reference: &ReferenceTrajectory,
    e0: &JointVector,
    e0_dot: &JointVector,
    params: &TbgParams,
    gains: &ControllerGains,
) -> Result<(JointVector, JointVector, JointVector)> {
    let qdd = crate::plant::forward_dynamics(plant, q, q_dot, u, d).map_err(|err| match err {
        Error::Numerical { detail, .. } => Error::Numerical { t, detail },
        other => other,
    })?;
    let (q_r, qd_r, _) = reference.eval(t);
    let e = q - q_r;
    let e_dot = q_dot - qd_r;
    let (eps, eps_dot) = tbg::transformed_error(&e, &e_dot, e0, e0_dot, t, params)?;
    let xi = controller::filtered_error(&eps, &eps_dot, &gains.k_diag);
    let chi_dot = controller::chi_derivative(chi, &xi, gains.gamma1, gains.gamma2);
    Ok((q_dot.clone(), qdd, chi_dot))
}

#[allow(clippy::too_many_arguments)]
fn rk4_step_augmented(
    plant: &dyn ElPlant,
    q: &JointVector,
    q_dot: &JointVector,
    chi: &JointVector,
    t: f64,
    dt: f64,
    u: &JointVector,
    d: &JointVector,
    reference: &ReferenceTrajectory,
    e0: &JointVector,
    e0_dot: &JointVector,
    params: &TbgParams,
    gains: &ControllerGains,
) -> Result<(JointVector, JointVector, JointVector)> {
    let f = |tt: f64, qq: &JointVector, vv: &JointVector, cc: &JointVector| {
        augmented_derivative(plant, qq, vv, cc, tt, u, d, reference, e0, e0_dot, params, gains)
    };
    let half = dt / 2.0;
    let (k1q, k1v, k1c) = f(t, q, q_dot, chi)?;
    let (k2q, k2v, k2c) = f(
        t + half,
        &(q + &k1q * half),
        &(q_dot + &k1v * half),
        &(chi + &k1c * half),
    )?;
    let (k3q, k3v, k3c) = f(
        t + half,
        &(q + &k2q * half),
        &(q_dot + &k2v * half),
        &(chi + &k2c * half),
    )?;
    let (k4q, k4v, k4c) = f(
        t + dt,
        &(q + &k3q * dt),
        &(q_dot + &k3v * dt),
        &(chi + &k3c * dt),
    )?;
    let sixth = dt / 6.0;
    Ok((
        q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * sixth,
        q_dot + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * sixth,
        chi + (k1c + k2c * 2.0 + k3c * 2.0 + k4c) * sixth,
    ))
}

/// Open-loop plant integration with a time-varying torque, used by the
/// integrator-order and energy-audit checks. The torque is evaluated at RK4
/// substage times (no hold).
pub fn simulate_plant_open_loop(
    plant: &dyn ElPlant,
    q0: &JointVector,
    v0: &JointVector,
    torque: impl Fn(f64) -> JointVector,
    d: &JointVector,
    dt: f64,
    t_end: f64,
) -> Result<(JointVector, JointVector)> {
    let n_steps = (t_end / dt).round() as usize;
    let mut q = q0.clone();
    let mut v = v0.clone();
    let f = |t: f64, qq: &JointVector, vv: &JointVector| -> Result<(JointVector, JointVector)> {
        let qdd = crate::plant::forward_dynamics(plant, qq, vv, &torque(t), d)?;
        Ok((vv.clone(), qdd))
    };
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let half = dt / 2.0;
        let (k1q, k1v) = f(t, &q, &v)?;
        let (k2q, k2v) = f(t + half, &(&q + &k1q * half), &(&v + &k1v * half))?;
        let (k3q, k3v) = f(t + half, &(&q + &k2q * half), &(&v + &k2v * half))?;
        let (k4q, k4v) = f(t + dt, &(&q + &k3q * dt), &(&v + &k3v * dt))?;
        let sixth = dt / 6.0;
        q += (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * sixth;
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * sixth;
        check_finite(t, "open-loop state", &q)?;
    }
    Ok((q, v))
}

/// Sweepable scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    MonitoringPeriod,
    Alpha,
    Beta0,
    PrescribedTime,
    Omega,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h" => Ok(SweepParam::MonitoringPeriod),
            "alpha" => Ok(SweepParam::Alpha),
            "beta0" => Ok(SweepParam::Beta0),
            "T" => Ok(SweepParam::PrescribedTime),
            "omega" => Ok(SweepParam::Omega),
            other => Err(Error::config(format!(
                "sweep parameter must be one of h, alpha, beta0, T, omega; got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SweepParam::MonitoringPeriod => write!(f, "h"),
            SweepParam::Alpha => write!(f, "alpha"),
            SweepParam::Beta0 => write!(f, "beta0"),
            SweepParam::PrescribedTime => write!(f, "T"),
            SweepParam::Omega => write!(f, "omega"),
        }
    }
}

pub fn apply_sweep_value(base: &Scenario, param: SweepParam, value: f64) -> Scenario {
    let mut s = base.clone();
    match param {
        SweepParam::MonitoringPeriod => s.trigger.h = value,
        SweepParam::Alpha => s.trigger.alpha = value,
        SweepParam::Beta0 => s.trigger.beta0 = value,
        SweepParam::PrescribedTime => s.trigger.prescribed_time = value,
        SweepParam::Omega => {
            s.gains.omega = value;
            s.gains.sigma = value;
        }
    }
    s
}

pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub outcome: Result<(RunSummary, crate::metrics::RunMetrics)>,
}

/// Runs one scenario per value; runs are independent and execute in parallel.
pub fn sweep(base: &Scenario, param: SweepParam, values: &[f64]) -> Vec<SweepRow> {
    values
        .par_iter()
        .map(|&value| {
            let scenario = apply_sweep_value(base, param, value);
            let outcome = (|| {
                let eps_bound = scenario.bound_set()?.eps_bound;
                let output = run(&scenario)?;
                let metrics = crate::metrics::compute(
                    &output,
                    scenario.trigger.prescribed_time,
                    scenario.sim.dt,
                    eps_bound,
                )?;
                Ok((output.summary, metrics))
            })();
            SweepRow { param, value, outcome }
        })
        .collect()
}

/// Kinetic-plus-auxiliary Lyapunov value recomputed from raw states, used by
/// tests cross-checking the recorded diagnostic.
pub fn lyapunov_value(m: &JointMatrix, xi: &JointVector, chi: &JointVector, gamma1: f64) -> f64 {
    0.5 * (xi.transpose() * m * xi)[(0, 0)] + chi.norm_squared() / (2.0 * gamma1)
}
