//! Event-triggering mechanisms with zero-order hold.
//!
//! Three modes share one state machine: periodic (the trigger condition is
//! checked only at integer multiples of the monitoring period h), continuous
//! (checked at every simulation step) and a time-triggered baseline that
//! transmits at every monitoring instant. An event latches the candidate
//! control and holds it until the next event.

use crate::{Error, JointVector, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerMode {
    Petc,
    Cetc,
    TimeTriggered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerConfig {
    pub mode: TriggerMode,
    /// Relative threshold weight, in (0, 1).
    pub alpha: f64,
    /// Slope of the time-varying threshold, in (0, 1).
    pub beta0: f64,
    /// Monitoring period (petc only); must be an integer multiple of dt.
    pub h: f64,
    /// Prescribed settling time shared with the TBG clock.
    pub prescribed_time: f64,
}

impl TriggerConfig {
    pub fn validate(&self, dt: f64) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!(
                "trigger.alpha: must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.beta0 > 0.0 && self.beta0 < 1.0) {
            return Err(Error::config(format!(
                "trigger.beta0: must lie in (0, 1), got {}",
                self.beta0
            )));
        }
        if !(self.prescribed_time > 0.0) {
            return Err(Error::config("trigger.prescribed_time_s: must be > 0"));
        }
        if self.mode == TriggerMode::Petc {
            if !(self.h > 0.0) {
                return Err(Error::config("trigger.h_s: must be > 0 in petc mode"));
            }
            // Monitoring instants are indexed on the simulation grid; h must
            // land on it exactly (up to float fuzz).
            let ratio = self.h / dt;
            if (ratio - ratio.round()).abs() * dt > 1e-9 || ratio.round() < 1.0 {
                return Err(Error::config(format!(
                    "trigger.h_s: monitoring period {} is not an integer multiple of sim.dt_s {}",
                    self.h, dt
                )));
            }
        }
        Ok(())
    }

    /// Monitoring stride in simulation steps (1 outside petc mode).
    pub fn monitor_stride(&self, dt: f64) -> usize {
        match self.mode {
            TriggerMode::Petc => (self.h / dt).round() as usize,
            TriggerMode::Cetc | TriggerMode::TimeTriggered => 1,
        }
    }
}

/// Time-varying threshold: beta0 (T - t) during the transient, 0 afterwards.
pub fn beta(t: f64, beta0: f64, prescribed_time: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t < prescribed_time {
        beta0 * (prescribed_time - t)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub index: usize,
    pub t: f64,
    /// ||u_c - u_held|| at the trigger instant.
    pub norm_ue: f64,
    /// ||u_held|| just before latching.
    pub norm_u_held: f64,
    pub beta: f64,
    pub reason: EventReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventReason {
    Init,
    Threshold,
    Periodic,
}

impl std::fmt::Display for EventReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EventReason::Init => write!(f, "init"),
            EventReason::Threshold => write!(f, "threshold"),
            EventReason::Periodic => write!(f, "periodic"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TriggerState {
    cfg: TriggerConfig,
    t_last: Option<f64>,
    u_held: Option<JointVector>,
    events: Vec<Event>,
}

impl TriggerState {
    pub fn new(cfg: TriggerConfig) -> Self {
        Self {
            cfg,
            t_last: None,
            u_held: None,
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> &TriggerConfig {
        &self.cfg
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn held(&self) -> Option<&JointVector> {
        self.u_held.as_ref()
    }

    /// True iff the candidate control violates the non-trigger inequality
    /// ||u_c - u_held|| < alpha ||u_held|| + beta(t).
    pub fn should_fire(&self, u_c_now: &JointVector, t: f64) -> bool {
        match &self.u_held {
            None => true,
            Some(held) => {
                let ue = (u_c_now - held).norm();
                ue >= self.cfg.alpha * held.norm() + beta(t, self.cfg.beta0, self.cfg.prescribed_time)
            }
        }
    }

    /// Advances the hold at a monitoring instant. Returns the applied control
    /// and whether an event fired. The first call always fires.
    pub fn step(&mut self, u_c_now: &JointVector, t: f64) -> Result<(JointVector, bool)> {
        if let Some(last) = self.t_last {
            if t <= last {
                return Err(Error::config(format!(
                    "trigger.step called with non-increasing time {t} after {last}"
                )));
            }
        }
        let fire = match (self.cfg.mode, &self.u_held) {
            (_, None) => true,
            (TriggerMode::TimeTriggered, Some(_)) => true,
            (TriggerMode::Petc | TriggerMode::Cetc, Some(_)) => self.should_fire(u_c_now, t),
        };
        if fire {
            let (norm_ue, norm_u_held, reason) = match &self.u_held {
                None => (0.0, 0.0, EventReason::Init),
                Some(held) => (
                    (u_c_now - held).norm(),
                    held.norm(),
                    if self.cfg.mode == TriggerMode::TimeTriggered {
                        EventReason::Periodic
                    } else {
                        EventReason::Threshold
                    },
                ),
            };
            self.events.push(Event {
                index: self.events.len(),
                t,
                norm_ue,
                norm_u_held,
                beta: beta(t, self.cfg.beta0, self.cfg.prescribed_time),
                reason,
            });
            self.u_held = Some(u_c_now.clone());
            self.t_last = Some(t);
        }
        Ok((self.u_held.clone().expect("hold initialized on first call"), fire))
    }
}
