//! Approximation-free adaptive barrier control law.
//!
//! Regulates the filtered error xi = eps_dot + K eps inside the ball of radius
//! omega through the barrier gain Pi = rho ||xi|| / (omega - ||xi||), with an
//! auxiliary first-order state chi shaping the state-constraint response and a
//! componentwise saturation mapping the raw torque into the input box.

use crate::plant::ConstraintBox;
use crate::tbg::{self, TbgParams};
use crate::{Error, JointVector, Result};

/// ||J|| for J = [-I_n, I_n]^T, exact for every n.
pub const J_NORM: f64 = std::f64::consts::SQRT_2;

/// Relative margin at which ||xi|| is clamped below omega.
pub const CLAMP_MARGIN: f64 = 1e-6;

/// Threshold below which the unit direction of xi is replaced by zero.
pub const XI_DIRECTION_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    /// Diagonal of the positive filter gain matrix K.
    pub k_diag: JointVector,
    pub rho: f64,
    pub omega: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Envelope slope parameter.
    pub eta: f64,
    /// Safety margin of the constraint envelope; omega by default.
    pub sigma: f64,
}

impl ControllerGains {
    pub fn k_min(&self) -> f64 {
        self.k_diag.min()
    }

    pub fn k_max(&self) -> f64 {
        self.k_diag.max()
    }

    pub fn validate(&self, n: usize, cbox: &ConstraintBox) -> Result<()> {
        if self.k_diag.len() != n {
            return Err(Error::config(format!("gains.k_diag: expected dimension {n}")));
        }
        if self.k_min() <= 0.0 {
            return Err(Error::config("gains.k_diag: entries must be > 0"));
        }
        for (name, v) in [("gains.rho", self.rho), ("gains.omega", self.omega), ("gains.gamma1", self.gamma1)] {
            if !(v > 0.0) {
                return Err(Error::config(format!("{name}: must be > 0, got {v}")));
            }
        }
        if !(self.gamma2 > 0.0 && self.gamma2 <= 1.0 / J_NORM) {
            return Err(Error::config(format!(
                "gains.gamma2: must lie in (0, 1/sqrt(2)], got {}",
                self.gamma2
            )));
        }
        if self.sigma < 0.0 {
            return Err(Error::config("gains.sigma: must be >= 0"));
        }
        // Slope condition tying the velocity box to the position box.
        let slope = (0..n)
            .map(|i| (cbox.v_hi[i] - cbox.v_lo[i]) / (cbox.q_hi[i] - cbox.q_lo[i]))
            .fold(0.0, f64::max);
        if !(self.eta > slope) {
            return Err(Error::config(format!(
                "gains.eta: must exceed the envelope slope condition {slope:.6}, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Runtime state of the controller: the auxiliary chi and the latched initial
/// errors feeding the TBG transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub chi: JointVector,
    pub e0: JointVector,
    pub e0_dot: JointVector,
}

impl ControllerState {
    /// chi starts at the origin of R^{2n}.
    pub fn new(e0: JointVector, e0_dot: JointVector) -> Self {
        let n = e0.len();
        Self {
            chi: JointVector::zeros(2 * n),
            e0,
            e0_dot,
        }
    }
}

/// xi = eps_dot + K eps.
pub fn filtered_error(eps: &JointVector, eps_dot: &JointVector, k_diag: &JointVector) -> JointVector {
    eps_dot + eps.component_mul(k_diag)
}

/// Upsilon = 4 max{1, ||eps||, ||eps_dot||, ||eps|| ||eps_dot||} >= 4.
pub fn upsilon(eps: &JointVector, eps_dot: &JointVector) -> f64 {
    let a = eps.norm();
    let b = eps_dot.norm();
    4.0 * 1.0f64.max(a).max(b).max(a * b)
}

/// Barrier gain Pi = rho ||xi|| / (omega - ||xi||).
///
/// ||xi|| < omega holds in continuous time; discrete integration may
/// momentarily overshoot, in which case the norm is clamped just below omega
/// and the event is reported to the caller for telemetry.
pub fn adaptive_gain(xi: &JointVector, rho: f64, omega: f64) -> (f64, bool) {
    let norm = xi.norm();
    let limit = (1.0 - CLAMP_MARGIN) * omega;
    let (norm, clamped) = if norm > limit { (limit, true) } else { (norm, false) };
    (rho * norm / (omega - norm), clamped)
}

/// chi_dot = -gamma1 chi + gamma1 gamma2 [ -xi ; xi ].
pub fn chi_derivative(chi: &JointVector, xi: &JointVector, gamma1: f64, gamma2: f64) -> JointVector {
    let n = xi.len();
    debug_assert_eq!(chi.len(), 2 * n);
    let mut out = chi * (-gamma1);
    let scale = gamma1 * gamma2;
    for i in 0..n {
        out[i] -= scale * xi[i];
        out[n + i] += scale * xi[i];
    }
    out
}

/// Raw (unsaturated) torque tau_c = -Pi (Upsilon + ||chi|| ||J||) xi / ||xi||.
///
/// The unit direction is taken as zero when ||xi|| <= 1e-9; Pi vanishes
/// simultaneously so the law stays continuous at xi = 0.
pub fn control_raw(
    xi: &JointVector,
    eps: &JointVector,
    eps_dot: &JointVector,
    chi: &JointVector,
    gains: &ControllerGains,
) -> (JointVector, f64, bool) {
    let norm = xi.norm();
    let (pi, clamped) = adaptive_gain(xi, gains.rho, gains.omega);
    if norm <= XI_DIRECTION_EPS {
        return (JointVector::zeros(xi.len()), pi, clamped);
    }
    let gain = pi * (upsilon(eps, eps_dot) + chi.norm() * J_NORM);
    (xi * (-gain / norm), pi, clamped)
}

/// Componentwise saturation into the torque box; equal to the diagonal scaling
/// form S_i(tau_i) tau_i exactly.
pub fn saturate(tau: &JointVector, cbox: &ConstraintBox) -> JointVector {
    let mut out = tau.clone();
    for i in 0..tau.len() {
        out[i] = tau[i].clamp(cbox.u_lo[i], cbox.u_hi[i]);
    }
    out
}

/// Time-varying state-constraint envelope evaluated at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSnapshot {
    pub x_lo: JointVector,
    pub x_hi: JointVector,
    pub y_lo: JointVector,
    pub y_hi: JointVector,
    pub e1_lo: JointVector,
    pub e1_hi: JointVector,
    pub psi0_lo: JointVector,
    pub psi0_hi: JointVector,
    /// Whether -psi0_lo + sigma < psi0_hi - sigma holds componentwise here.
    pub feasible: bool,
}

/// Computes the position/velocity margin envelope and the filtered-error
/// inequality bounds at time t.
#[allow(clippy::too_many_arguments)]
pub fn envelope(
    e: &JointVector,
    eps: &JointVector,
    t: f64,
    cbox: &ConstraintBox,
    q_r: &JointVector,
    qd_r: &JointVector,
    gains: &ControllerGains,
    e0: &JointVector,
    e0_dot: &JointVector,
    tbg: &TbgParams,
) -> EnvelopeSnapshot {
    let n = e.len();
    let x_lo = &cbox.q_lo - q_r;
    let x_hi = &cbox.q_hi - q_r;
    let y_lo = &cbox.v_lo - qd_r;
    let y_hi = &cbox.v_hi - qd_r;

    let mut e1_lo = JointVector::zeros(n);
    let mut e1_hi = JointVector::zeros(n);
    for i in 0..n {
        e1_lo[i] = y_lo[i].max(gains.eta * (x_lo[i] - e[i]));
        e1_hi[i] = y_hi[i].min(gains.eta * (x_hi[i] - e[i]));
    }

    let offset_dot = tbg::error_offset_dot(t, e0, e0_dot, tbg);
    let eps1_lo = &e1_lo - &offset_dot;
    let eps1_hi = &e1_hi - &offset_dot;
    let k_eps = eps.component_mul(&gains.k_diag);
    let psi0_lo = eps1_lo + &k_eps;
    let psi0_hi = eps1_hi + &k_eps;

    let feasible = (0..n).all(|i| -psi0_lo[i] + gains.sigma < psi0_hi[i] - gains.sigma);

    EnvelopeSnapshot {
        x_lo,
        x_hi,
        y_lo,
        y_hi,
        e1_lo,
        e1_hi,
        psi0_lo,
        psi0_hi,
        feasible,
    }
}
