//! Euler-Lagrange plant dynamics, constraint boxes, disturbance models and
//! reference trajectories.
//!
//! The bundled plant is a planar two-link revolute arm with closed-form
//! inertia, Coriolis and gravity terms; every quantity is hand-checkable.
//! Property constants (inertia eigenvalue range, Coriolis/gravity/friction
//! norm bounds) are estimated by dense grid sampling over the constraint box
//! with a 10% inflation factor.

use crate::{Error, JointMatrix, JointVector, Result};

/// Abstract Euler-Lagrange dynamics M(q) qdd + C(q, qd) qd + G(q) + F(qd) + d = u.
pub trait ElPlant: Send + Sync {
    fn dof(&self) -> usize;
    /// Symmetric positive-definite inertia matrix.
    fn mass_matrix(&self, q: &JointVector) -> JointMatrix;
    /// Coriolis/centripetal matrix in Christoffel form (so Mdot - 2C is skew).
    fn coriolis(&self, q: &JointVector, q_dot: &JointVector) -> JointMatrix;
    fn gravity(&self, q: &JointVector) -> JointVector;
    fn friction(&self, q_dot: &JointVector) -> JointVector;
}

/// Planar 2-DoF revolute arm with rod links.
#[derive(Debug, Clone, Copy)]
pub struct TwoLinkArm {
    pub link_mass: [f64; 2],
    pub link_length: [f64; 2],
    /// Center-of-mass offsets along each link.
    pub com_offset: [f64; 2],
    /// Rotational inertias about each link's center of mass.
    pub link_inertia: [f64; 2],
    pub gravity_accel: f64,
    /// Viscous friction coefficient, F(qd) = b * qd.
    pub viscous_friction: f64,
}

impl TwoLinkArm {
    /// Unit-mass, unit-length arm with mid-link CoM, rod inertia m L^2 / 12,
    /// g = 9.81 m/s^2 and viscous friction 0.1 N.m.s.
    pub fn standard() -> Self {
        Self::with_params(1.0, 1.0, 9.81, 0.1)
    }

    /// Rod-link arm with equal masses/lengths and configurable gravity/friction.
    pub fn with_params(mass: f64, length: f64, gravity_accel: f64, viscous_friction: f64) -> Self {
        let inertia = mass * length * length / 12.0;
        Self {
            link_mass: [mass, mass],
            link_length: [length, length],
            com_offset: [length / 2.0, length / 2.0],
            link_inertia: [inertia, inertia],
            gravity_accel,
            viscous_friction,
        }
    }
}

impl ElPlant for TwoLinkArm {
    fn dof(&self) -> usize {
        2
    }

    fn mass_matrix(&self, q: &JointVector) -> JointMatrix {
        let [m1, m2] = self.link_mass;
        let l1 = self.link_length[0];
        let [lc1, lc2] = self.com_offset;
        let [i1, i2] = self.link_inertia;
        let c2 = q[1].cos();
        let m22 = m2 * lc2 * lc2 + i2;
        let m12 = m22 + m2 * l1 * lc2 * c2;
        let m11 = m1 * lc1 * lc1 + i1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + i2;
        JointMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22])
    }

    fn coriolis(&self, q: &JointVector, q_dot: &JointVector) -> JointMatrix {
        let m2 = self.link_mass[1];
        let l1 = self.link_length[0];
        let lc2 = self.com_offset[1];
        let h = -m2 * l1 * lc2 * q[1].sin();
        let (qd1, qd2) = (q_dot[0], q_dot[1]);
        JointMatrix::from_row_slice(2, 2, &[h * qd2, h * (qd1 + qd2), -h * qd1, 0.0])
    }

    fn gravity(&self, q: &JointVector) -> JointVector {
        let [m1, m2] = self.link_mass;
        let l1 = self.link_length[0];
        let [lc1, lc2] = self.com_offset;
        let g = self.gravity_accel;
        let c1 = q[0].cos();
        let c12 = (q[0] + q[1]).cos();
        JointVector::from_vec(vec![
            (m1 * lc1 + m2 * l1) * g * c1 + m2 * lc2 * g * c12,
            m2 * lc2 * g * c12,
        ])
    }

    fn friction(&self, q_dot: &JointVector) -> JointVector {
        q_dot * self.viscous_friction
    }
}

/// qdd = M(q)^-1 (u - C qd - G - F - d).
pub fn forward_dynamics(
    plant: &dyn ElPlant,
    q: &JointVector,
    q_dot: &JointVector,
    u: &JointVector,
    d: &JointVector,
) -> Result<JointVector> {
    let m = plant.mass_matrix(q);
    let rhs = u - plant.coriolis(q, q_dot) * q_dot - plant.gravity(q) - plant.friction(q_dot) - d;
    m.clone().lu().solve(&rhs).ok_or_else(|| Error::Numerical {
        t: f64::NAN,
        detail: format!("mass matrix solve failed at q = {:?}", q.as_slice()),
    })
}

/// Componentwise state and input constraint box.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBox {
    pub q_lo: JointVector,
    pub q_hi: JointVector,
    pub v_lo: JointVector,
    pub v_hi: JointVector,
    pub u_lo: JointVector,
    pub u_hi: JointVector,
}

impl ConstraintBox {
    pub fn validate(&self, n: usize) -> Result<()> {
        let fields: [(&str, &JointVector, &JointVector); 3] = [
            ("constraints.q", &self.q_lo, &self.q_hi),
            ("constraints.v", &self.v_lo, &self.v_hi),
            ("constraints.u", &self.u_lo, &self.u_hi),
        ];
        for (name, lo, hi) in fields {
            if lo.len() != n || hi.len() != n {
                return Err(Error::config(format!("{name}: expected dimension {n}")));
            }
            for i in 0..n {
                if !(lo[i] < hi[i]) {
                    return Err(Error::config(format!(
                        "{name}: lower bound must be strictly below upper bound at joint {i} ({} vs {})",
                        lo[i], hi[i]
                    )));
                }
            }
        }
        // Saturation scaling requires zero torque to be admissible.
        for i in 0..n {
            if !(self.u_lo[i] < 0.0 && self.u_hi[i] > 0.0) {
                return Err(Error::config(format!(
                    "constraints.u: torque box must contain 0 strictly at joint {i}"
                )));
            }
        }
        Ok(())
    }

    pub fn contains_state(&self, q: &JointVector, q_dot: &JointVector) -> bool {
        (0..q.len()).all(|i| {
            q[i] >= self.q_lo[i] && q[i] <= self.q_hi[i] && q_dot[i] >= self.v_lo[i] && q_dot[i] <= self.v_hi[i]
        })
    }

    /// Largest torque magnitude admitted by the box, max_i max(|u_lo_i|, u_hi_i).
    pub fn torque_magnitude(&self) -> f64 {
        (0..self.u_lo.len())
            .map(|i| self.u_lo[i].abs().max(self.u_hi[i].abs()))
            .fold(0.0, f64::max)
    }

    /// Largest velocity magnitude, max_i max(|v_lo_i|, v_hi_i).
    pub fn velocity_magnitude(&self) -> f64 {
        (0..self.v_lo.len())
            .map(|i| self.v_lo[i].abs().max(self.v_hi[i].abs()))
            .fold(0.0, f64::max)
    }
}

/// Bounded exogenous disturbance entering the torque balance.
#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceSpec {
    Constant { amplitude: JointVector },
    Sinusoidal { amplitude: JointVector, frequency: f64 },
}

impl DisturbanceSpec {
    pub fn eval(&self, t: f64) -> JointVector {
        match self {
            DisturbanceSpec::Constant { amplitude } => amplitude.clone(),
            DisturbanceSpec::Sinusoidal { amplitude, frequency } => amplitude * (frequency * t).sin(),
        }
    }

    /// Norm bound valid for all t.
    pub fn bound(&self) -> f64 {
        match self {
            DisturbanceSpec::Constant { amplitude } | DisturbanceSpec::Sinusoidal { amplitude, .. } => {
                amplitude.norm()
            }
        }
    }

    pub fn dof(&self) -> usize {
        match self {
            DisturbanceSpec::Constant { amplitude } | DisturbanceSpec::Sinusoidal { amplitude, .. } => {
                amplitude.len()
            }
        }
    }
}

/// Reference trajectory with exact analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceTrajectory {
    /// Rest-to-rest quintic per joint over `duration` seconds, held at the end.
    MinJerk {
        start: JointVector,
        end: JointVector,
        duration: f64,
    },
    /// Per-joint q_r_i = A_i sin(w_i t + phi_i).
    Sinusoidal {
        amplitude: JointVector,
        frequency: JointVector,
        phase: JointVector,
    },
}

impl ReferenceTrajectory {
    pub fn dof(&self) -> usize {
        match self {
            ReferenceTrajectory::MinJerk { start, .. } => start.len(),
            ReferenceTrajectory::Sinusoidal { amplitude, .. } => amplitude.len(),
        }
    }

    /// (q_r, qd_r, qdd_r) at time t >= 0.
    pub fn eval(&self, t: f64) -> (JointVector, JointVector, JointVector) {
        match self {
            ReferenceTrajectory::MinJerk { start, end, duration } => {
                let n = start.len();
                if t >= *duration {
                    return (end.clone(), JointVector::zeros(n), JointVector::zeros(n));
                }
                let s = t / duration;
                let blend = ((6.0 * s - 15.0) * s + 10.0) * s * s * s;
                let blend_d = ((30.0 * s - 60.0) * s + 30.0) * s * s / duration;
                let blend_dd = ((120.0 * s - 180.0) * s + 60.0) * s / (duration * duration);
                let delta = end - start;
                (
                    start + &delta * blend,
                    &delta * blend_d,
                    &delta * blend_dd,
                )
            }
            ReferenceTrajectory::Sinusoidal { amplitude, frequency, phase } => {
                let n = amplitude.len();
                let mut q = JointVector::zeros(n);
                let mut qd = JointVector::zeros(n);
                let mut qdd = JointVector::zeros(n);
                for i in 0..n {
                    let (a, w, ph) = (amplitude[i], frequency[i], phase[i]);
                    let arg = w * t + ph;
                    q[i] = a * arg.sin();
                    qd[i] = a * w * arg.cos();
                    qdd[i] = -a * w * w * arg.sin();
                }
                (q, qd, qdd)
            }
        }
    }

    /// Norm bounds (q_r, qd_r, qdd_r) over [0, horizon] by dense sampling.
    pub fn norm_bounds(&self, horizon: f64, samples: usize) -> (f64, f64, f64) {
        let mut b = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..=samples {
            let t = horizon * i as f64 / samples as f64;
            let (q, qd, qdd) = self.eval(t);
            b.0 = b.0.max(q.norm());
            b.1 = b.1.max(qd.norm());
            b.2 = b.2.max(qdd.norm());
        }
        b
    }

    /// Checks box membership of the reference over [0, horizon] by dense
    /// sampling; returns the first violating instant.
    pub fn check_feasibility(
        &self,
        cbox: &ConstraintBox,
        horizon: f64,
        samples: usize,
    ) -> Result<()> {
        for i in 0..=samples {
            let t = horizon * i as f64 / samples as f64;
            let (q, qd, _) = self.eval(t);
            for j in 0..q.len() {
                if q[j] < cbox.q_lo[j] || q[j] > cbox.q_hi[j] {
                    return Err(Error::config(format!(
                        "reference: position leaves the constraint box at t = {t:.6} s (joint {j}, q_r = {})",
                        q[j]
                    )));
                }
                if qd[j] < cbox.v_lo[j] || qd[j] > cbox.v_hi[j] {
                    return Err(Error::config(format!(
                        "reference: velocity leaves the constraint box at t = {t:.6} s (joint {j}, qd_r = {})",
                        qd[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Grid-estimated property constants, inflated by a 10% safety factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyBounds {
    /// Inertia eigenvalue range: m_lo I <= M(q) <= m_hi I.
    pub m_lo: f64,
    pub m_hi: f64,
    /// Inverse-inertia eigenvalue range.
    pub l_lo: f64,
    pub l_hi: f64,
    /// ||C(q, qd)|| <= c_bar ||qd||.
    pub c_bar: f64,
    /// ||G(q)|| <= g_bar.
    pub g_bar: f64,
    /// ||F(qd)|| <= f_bar ||qd||.
    pub f_bar: f64,
}

const SAFETY_FACTOR: f64 = 1.1;

/// Estimates Property 2/3 style constants by sampling `grid` points per joint
/// over the position box. The Coriolis ratio ||C||/||qd|| is sampled over the
/// same position grid times `velocity_directions` unit directions (C is
/// linear in qd, so unit directions suffice) scaled to the velocity box edge.
pub fn property_bounds(
    plant: &dyn ElPlant,
    cbox: &ConstraintBox,
    grid: usize,
    velocity_directions: usize,
) -> PropertyBounds {
    assert!(grid >= 2);
    let n = plant.dof();
    assert_eq!(n, 2, "grid sampler is written for 2-DoF plants");

    let mut m_lo = f64::INFINITY;
    let mut m_hi: f64 = 0.0;
    let mut g_bar: f64 = 0.0;
    let mut c_ratio: f64 = 0.0;
    let mut f_ratio: f64 = 0.0;

    let vmax = cbox.velocity_magnitude().max(1.0);
    for i in 0..grid {
        let q0 = cbox.q_lo[0] + (cbox.q_hi[0] - cbox.q_lo[0]) * i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let q1 = cbox.q_lo[1] + (cbox.q_hi[1] - cbox.q_lo[1]) * j as f64 / (grid - 1) as f64;
            let q = JointVector::from_vec(vec![q0, q1]);
            let m = plant.mass_matrix(&q);
            let eig = m.symmetric_eigenvalues();
            for k in 0..eig.len() {
                m_lo = m_lo.min(eig[k]);
                m_hi = m_hi.max(eig[k]);
            }
            g_bar = g_bar.max(plant.gravity(&q).norm());
            for k in 0..velocity_directions {
                let theta = std::f64::consts::TAU * k as f64 / velocity_directions as f64;
                let qd = JointVector::from_vec(vec![theta.cos(), theta.sin()]) * vmax;
                let speed = qd.norm();
                if speed > 1e-6 {
                    c_ratio = c_ratio.max(operator_norm(&plant.coriolis(&q, &qd)) / speed);
                    f_ratio = f_ratio.max(plant.friction(&qd).norm() / speed);
                }
            }
        }
    }

    PropertyBounds {
        m_lo: m_lo / SAFETY_FACTOR,
        m_hi: m_hi * SAFETY_FACTOR,
        l_lo: 1.0 / (m_hi * SAFETY_FACTOR),
        l_hi: SAFETY_FACTOR / m_lo,
        c_bar: c_ratio * SAFETY_FACTOR,
        g_bar: g_bar * SAFETY_FACTOR,
        f_bar: f_ratio * SAFETY_FACTOR,
    }
}

/// Induced-2 norm via the symmetric eigenvalues of A^T A.
pub fn operator_norm(a: &JointMatrix) -> f64 {
    let ata = a.transpose() * a;
    let eig = ata.symmetric_eigenvalues();
    (0..eig.len()).map(|i| eig[i].max(0.0)).fold(0.0, f64::max).sqrt()
}
