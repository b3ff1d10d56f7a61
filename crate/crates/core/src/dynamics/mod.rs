//! Kinematics, mass matrix, bias forces, actuation and integration.
//!
//! Velocity conventions: a free joint stores the world-frame linear velocity
//! of the body origin followed by the body-frame angular velocity; a ball
//! joint stores body-frame angular velocity. Integration is semi-implicit
//! Euler: velocities are updated first, then positions use the new velocity.

mod kinematics;
mod spatial;
mod terms;

use thiserror::Error;

pub use kinematics::{dof_chain, forward_kinematics, last_dof, point_jacobian, Aabb, Kinematics};
pub use spatial::{Force, Motion, SpatialInertia};
pub use terms::{actuator_torques, bias_forces, free_velocity, mass_matrix, tree_mass_matrix, DynamicsTerms, TreeBlock};

use crate::linalg::{LinalgError, Quat, Vec3};
use crate::model::{JointKind, Model};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("control vector has length {got}, model has {expected} actuators")]
    CtrlLengthMismatch { expected: usize, got: usize },
    #[error("state has non-finite entries")]
    NonFiniteState,
    #[error("state shape mismatch: q {nq}, v {nv}")]
    StateShape { nq: usize, nv: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl State {
    /// Reference configuration at rest.
    pub fn new(model: &Model) -> Self {
        State {
            q: model.qpos0.clone(),
            v: vec![0.0; model.nv],
            t: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.v).all(|x| x.is_finite()) && self.t.is_finite()
    }

    pub fn check(&self, model: &Model) -> Result<(), DynamicsError> {
        if self.q.len() != model.nq || self.v.len() != model.nv {
            return Err(DynamicsError::StateShape {
                nq: self.q.len(),
                nv: self.v.len(),
            });
        }
        if !self.is_finite() {
            return Err(DynamicsError::NonFiniteState);
        }
        Ok(())
    }

    /// Sets a free joint's pose.
    pub fn set_free_pose(&mut self, model: &Model, joint: usize, pos: Vec3, rot: Quat) {
        let a = model.joints[joint].qpos_adr;
        self.q[a..a + 3].copy_from_slice(&pos.to_array());
        self.q[a + 3..a + 7].copy_from_slice(&rot.normalize().to_array());
    }
}

/// Semi-implicit Euler step: `v ← v⁺`, then `q` advanced with `v⁺`.
pub fn integrate(model: &Model, state: &State, v_plus: &[f64], h: f64) -> Result<State, DynamicsError> {
    let mut q = state.q.clone();
    for j in &model.joints {
        let (qa, da) = (j.qpos_adr, j.dof_adr);
        match j.kind {
            JointKind::Hinge | JointKind::Slide => q[qa] += h * v_plus[da],
            JointKind::Free => {
                for i in 0..3 {
                    q[qa + i] += h * v_plus[da + i];
                }
                let rot = Quat::new(q[qa + 3], q[qa + 4], q[qa + 5], q[qa + 6]);
                let w = Vec3::new(v_plus[da + 3], v_plus[da + 4], v_plus[da + 5]);
                q[qa + 3..qa + 7].copy_from_slice(&rot.integrate(w, h).to_array());
            }
            JointKind::Ball => {
                let rot = Quat::new(q[qa], q[qa + 1], q[qa + 2], q[qa + 3]);
                let w = Vec3::new(v_plus[da], v_plus[da + 1], v_plus[da + 2]);
                q[qa..qa + 4].copy_from_slice(&rot.integrate(w, h).to_array());
            }
        }
    }
    let next = State {
        q,
        v: v_plus.to_vec(),
        t: state.t + h,
    };
    if !next.is_finite() {
        return Err(DynamicsError::NonFiniteState);
    }
    Ok(next)
}

/// Kinetic and gravitational potential energy.
pub fn energy(model: &Model, state: &State, kin: &Kinematics) -> (f64, f64) {
    let m = mass_matrix(model, kin);
    let mv = m.mul_vec(&state.v);
    let kinetic = 0.5 * state.v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>();
    let potential = (1..model.nbody())
        .map(|b| -model.bodies[b].mass * model.opt.gravity.dot(kin.xcom[b]))
        .sum();
    (kinetic, potential)
}
