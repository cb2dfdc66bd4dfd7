//! Time-based generator (TBG) polynomials and the shaped error transform.
//!
//! The quintic pair `p1`, `p2` smoothly cancels the initial tracking error and
//! error rate so that the transformed error and its derivative are exactly zero
//! at t = 0 and the cancellation terms vanish identically for t >= T. All
//! derivatives are hard-coded analytic polynomials so the boundary identities
//! hold to machine precision.

use crate::{Error, JointVector, Result};

/// Prescribed settling time of the TBG pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbgParams {
    settling_time: f64,
}

impl TbgParams {
    pub fn new(settling_time: f64) -> Result<Self> {
        if !(settling_time > 0.0) || !settling_time.is_finite() {
            return Err(Error::config(format!(
                "tbg settling time T must be finite and > 0, got {settling_time}"
            )));
        }
        Ok(Self { settling_time })
    }

    pub fn settling_time(&self) -> f64 {
        self.settling_time
    }
}

/// Position-shaping polynomial: 1 at t = 0, 0 at and beyond t = T.
pub fn p1(t: f64, params: &TbgParams) -> f64 {
    debug_assert!(t >= 0.0);
    let tt = params.settling_time;
    if t > tt {
        return 0.0;
    }
    let s = t / tt;
    ((-6.0 * s + 15.0) * s - 10.0) * s * s * s + 1.0
}

/// Velocity-shaping polynomial: slope 1 at t = 0, 0 at and beyond t = T.
pub fn p2(t: f64, params: &TbgParams) -> f64 {
    debug_assert!(t >= 0.0);
    let tt = params.settling_time;
    if t > tt {
        return 0.0;
    }
    let s = t / tt;
    (((-3.0 * s + 8.0) * s - 6.0) * s * s + 1.0) * t
}

pub fn p1_dot(t: f64, params: &TbgParams) -> f64 {
    debug_assert!(t >= 0.0);
    let tt = params.settling_time;
    if t > tt {
        return 0.0;
    }
    let s = t / tt;
    ((-30.0 * s + 60.0) * s - 30.0) * s * s / tt
}

pub fn p1_ddot(t: f64, params: &TbgParams) -> f64 {
    debug_assert!(t >= 0.0);
    let tt = params.settling_time;
    if t > tt {
        return 0.0;
    }
    let s = t / tt;
    ((-120.0 * s + 180.0) * s - 60.0) * s / (tt * tt)
}

pub fn p2_dot(t: f64, params: &TbgParams) -> f64 {
    debug_assert!(t >= 0.0);
    let tt = params.settling_time;
    if t > tt {
        return 0.0;
    }
    let s = t / tt;
    (((-15.0 * s + 32.0) * s - 18.0) * s * s) + 1.0
}

pub fn p2_ddot(t: f64, params: &TbgParams) -> f64 {
    debug_assert!(t >= 0.0);
    let tt = params.settling_time;
    if t > tt {
        return 0.0;
    }
    let s = t / tt;
    ((-60.0 * s + 96.0) * s - 36.0) * s / tt
}

/// Offset subtracted from the raw error: p1(t) e(0) + p2(t) de(0).
pub fn error_offset(t: f64, e0: &JointVector, e0_dot: &JointVector, params: &TbgParams) -> JointVector {
    e0 * p1(t, params) + e0_dot * p2(t, params)
}

/// Time derivative of [`error_offset`].
pub fn error_offset_dot(
    t: f64,
    e0: &JointVector,
    e0_dot: &JointVector,
    params: &TbgParams,
) -> JointVector {
    e0 * p1_dot(t, params) + e0_dot * p2_dot(t, params)
}

/// Second time derivative of [`error_offset`].
pub fn error_offset_ddot(
    t: f64,
    e0: &JointVector,
    e0_dot: &JointVector,
    params: &TbgParams,
) -> JointVector {
    e0 * p1_ddot(t, params) + e0_dot * p2_ddot(t, params)
}

/// TBG-transformed error pair (eps, eps_dot).
///
/// eps = e - (p1 e(0) + p2 de(0)), eps_dot = de - (dp1 e(0) + dp2 de(0)).
/// Both vanish at t = 0 when (e, de) equal the latched initial errors.
pub fn transformed_error(
    e: &JointVector,
    e_dot: &JointVector,
    e0: &JointVector,
    e0_dot: &JointVector,
    t: f64,
    params: &TbgParams,
) -> Result<(JointVector, JointVector)> {
    let n = e.len();
    if e_dot.len() != n || e0.len() != n || e0_dot.len() != n {
        return Err(Error::config(format!(
            "transformed_error dimension mismatch: e={}, e_dot={}, e0={}, e0_dot={}",
            n,
            e_dot.len(),
            e0.len(),
            e0_dot.len()
        )));
    }
    let eps = e - error_offset(t, e0, e0_dot, params);
    let eps_dot = e_dot - error_offset_dot(t, e0, e0_dot, params);
    Ok((eps, eps_dot))
}
