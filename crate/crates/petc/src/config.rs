//! Scenario configuration files.
//!
//! Sectioned key-value (TOML) with units spelled out in key names. Loading
//! performs full schema validation plus the cross-field checks of the runtime
//! types, so a scenario that loads is a scenario that runs.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::controller::ControllerGains;
use crate::plant::{ConstraintBox, DisturbanceSpec, ReferenceTrajectory, TwoLinkArm};
use crate::sim::{Scenario, SimConfig};
use crate::trigger::{TriggerConfig, TriggerMode};
use crate::{Error, JointVector, Result};

/// Bundled 2-DoF reference scenario.
pub const DEFAULT_SCENARIO_TOML: &str = include_str!("../scenarios/default.toml");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub plant: PlantSection,
    pub constraints: ConstraintsSection,
    pub reference: ReferenceSection,
    pub disturbance: DisturbanceSection,
    pub gains: GainsSection,
    pub trigger: TriggerSection,
    pub sim: SimSection,
    #[serde(default)]
    pub bounds: BoundsSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    /// Only "two_link_arm" is currently available.
    pub model: String,
    pub link_mass_kg: f64,
    pub link_length_m: f64,
    pub gravity_mps2: f64,
    pub viscous_friction_nms: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsSection {
    pub q_min_rad: Vec<f64>,
    pub q_max_rad: Vec<f64>,
    pub v_min_rads: Vec<f64>,
    pub v_max_rads: Vec<f64>,
    pub u_min_nm: Vec<f64>,
    pub u_max_nm: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub kind: String,
    pub start_rad: Option<Vec<f64>>,
    pub end_rad: Option<Vec<f64>>,
    pub duration_s: Option<f64>,
    pub amplitude_rad: Option<Vec<f64>>,
    pub frequency_rads: Option<Vec<f64>>,
    pub phase_rad: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub kind: String,
    pub amplitude_nm: Vec<f64>,
    pub frequency_rads: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub k_diag: Vec<f64>,
    pub rho: f64,
    pub omega: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub eta: f64,
    /// Defaults to omega when omitted.
    pub sigma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSection {
    pub mode: TriggerMode,
    pub alpha: f64,
    pub beta0: f64,
    #[serde(default)]
    pub h_s: f64,
    pub prescribed_time_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub dt_s: f64,
    pub t_end_s: f64,
    pub q0_rad: Vec<f64>,
    pub v0_rads: Vec<f64>,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
}

fn default_record_stride() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default = "default_grid")]
    pub grid_points_per_dim: usize,
    #[serde(default = "default_directions")]
    pub velocity_directions: usize,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            r: default_r(),
            grid_points_per_dim: default_grid(),
            velocity_directions: default_directions(),
        }
    }
}

fn default_r() -> f64 {
    1.0
}

fn default_grid() -> usize {
    50
}

fn default_directions() -> usize {
    64
}

fn jv(v: &[f64]) -> JointVector {
    JointVector::from_vec(v.to_vec())
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("scenario parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Builds and fully validates the runtime scenario.
    pub fn into_scenario(self) -> Result<Scenario> {
        if self.plant.model != "two_link_arm" {
            return Err(Error::config(format!(
                "plant.model: unknown model '{}', expected 'two_link_arm'",
                self.plant.model
            )));
        }
        let plant = TwoLinkArm::with_params(
            self.plant.link_mass_kg,
            self.plant.link_length_m,
            self.plant.gravity_mps2,
            self.plant.viscous_friction_nms,
        );

        let cbox = ConstraintBox {
            q_lo: jv(&self.constraints.q_min_rad),
            q_hi: jv(&self.constraints.q_max_rad),
            v_lo: jv(&self.constraints.v_min_rads),
            v_hi: jv(&self.constraints.v_max_rads),
            u_lo: jv(&self.constraints.u_min_nm),
            u_hi: jv(&self.constraints.u_max_nm),
        };

        let reference = match self.reference.kind.as_str() {
            "min_jerk" => {
                let start = self
                    .reference
                    .start_rad
                    .ok_or_else(|| Error::config("reference.start_rad: required for min_jerk"))?;
                let end = self
                    .reference
                    .end_rad
                    .ok_or_else(|| Error::config("reference.end_rad: required for min_jerk"))?;
                let duration = self
                    .reference
                    .duration_s
                    .ok_or_else(|| Error::config("reference.duration_s: required for min_jerk"))?;
                if !(duration > 0.0) {
                    return Err(Error::config("reference.duration_s: must be > 0"));
                }
                ReferenceTrajectory::MinJerk {
                    start: jv(&start),
                    end: jv(&end),
                    duration,
                }
            }
            "sinusoidal" => {
                let amplitude = self
                    .reference
                    .amplitude_rad
                    .ok_or_else(|| Error::config("reference.amplitude_rad: required for sinusoidal"))?;
                let frequency = self
                    .reference
                    .frequency_rads
                    .ok_or_else(|| Error::config("reference.frequency_rads: required for sinusoidal"))?;
                let phase = self
                    .reference
                    .phase_rad
                    .unwrap_or_else(|| vec![0.0; amplitude.len()]);
                ReferenceTrajectory::Sinusoidal {
                    amplitude: jv(&amplitude),
                    frequency: jv(&frequency),
                    phase: jv(&phase),
                }
            }
            other => {
                return Err(Error::config(format!(
                    "reference.kind: unknown kind '{other}', expected 'min_jerk' or 'sinusoidal'"
                )))
            }
        };

        let disturbance = match self.disturbance.kind.as_str() {
            "constant" => DisturbanceSpec::Constant {
                amplitude: jv(&self.disturbance.amplitude_nm),
            },
            "sinusoidal" => DisturbanceSpec::Sinusoidal {
                amplitude: jv(&self.disturbance.amplitude_nm),
                frequency: self
                    .disturbance
                    .frequency_rads
                    .ok_or_else(|| Error::config("disturbance.frequency_rads: required for sinusoidal"))?,
            },
            other => {
                return Err(Error::config(format!(
                    "disturbance.kind: unknown kind '{other}', expected 'constant' or 'sinusoidal'"
                )))
            }
        };

        let gains = ControllerGains {
            k_diag: jv(&self.gains.k_diag),
            rho: self.gains.rho,
            omega: self.gains.omega,
            gamma1: self.gains.gamma1,
            gamma2: self.gains.gamma2,
            eta: self.gains.eta,
            sigma: self.gains.sigma.unwrap_or(self.gains.omega),
        };

        let trigger = TriggerConfig {
            mode: self.trigger.mode,
            alpha: self.trigger.alpha,
            beta0: self.trigger.beta0,
            h: self.trigger.h_s,
            prescribed_time: self.trigger.prescribed_time_s,
        };

        let sim = SimConfig {
            dt: self.sim.dt_s,
            t_end: self.sim.t_end_s,
            q0: jv(&self.sim.q0_rad),
            v0: jv(&self.sim.v0_rads),
            record_stride: self.sim.record_stride,
        };

        let scenario = Scenario {
            plant: Arc::new(plant),
            cbox,
            reference,
            disturbance,
            gains,
            trigger,
            sim,
            bound_r: self.bounds.r,
            grid_points: self.bounds.grid_points_per_dim,
            velocity_directions: self.bounds.velocity_directions,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    ScenarioFile::load(path)?.into_scenario()
}

/// The bundled default 2-DoF scenario.
pub fn default_scenario() -> Scenario {
    ScenarioFile::parse(DEFAULT_SCENARIO_TOML)
        .expect("bundled scenario parses")
        .into_scenario()
        .expect("bundled scenario validates")
}
