use std::ops::Range;

use super::kinematics::Kinematics;
use super::spatial::{Force, Motion, SpatialInertia};
use super::{DynamicsError, State};
use crate::exec::Pool;
use crate::linalg::{Cholesky, DenseMat, LinalgError};
use crate::model::{ActuatorKind, JointKind, Model};

fn body_inertias(model: &Model, kin: &Kinematics) -> Vec<SpatialInertia> {
    model
        .bodies
        .iter()
        .enumerate()
        .map(|(b, body)| {
            if b == 0 {
                return SpatialInertia::default();
            }
            let r = kin.xform[b].rotation.to_mat3();
            SpatialInertia::from_body(body.mass, kin.xcom[b], body.inertia.congruence(&r))
        })
        .collect()
}

/// Mass matrix block of one kinematic tree, indexed relative to `tree.dofs`.
pub fn tree_mass_matrix(model: &Model, kin: &Kinematics, tree: usize) -> DenseMat {
    let t = &model.trees[tree];
    let off = t.dofs.start;
    let n = t.dofs.len();
    let mut m = DenseMat::zeros(n, n);
    // composite inertia, children before parents (bodies are stored parent-first)
    let mut comp: Vec<SpatialInertia> = Vec::with_capacity(t.bodies.len());
    let index_of = |b: usize| t.bodies.binary_search(&b).ok();
    for &b in &t.bodies {
        let body = &model.bodies[b];
        let r = kin.xform[b].rotation.to_mat3();
        comp.push(SpatialInertia::from_body(body.mass, kin.xcom[b], body.inertia.congruence(&r)));
    }
    for (i, &b) in t.bodies.iter().enumerate().rev() {
        if let Some(p) = index_of(model.bodies[b].parent) {
            let c = comp[i];
            comp[p] += c;
        }
    }
    for (bi, &b) in t.bodies.iter().enumerate() {
        for d in model.bodies[b].dofs.clone() {
            let f = comp[bi].apply(&kin.cdof[d]);
            let mut j = Some(d);
            while let Some(jd) = j {
                let val = kin.cdof[jd].dot(&f);
                m.row_mut(d - off)[jd - off] = val;
                m.row_mut(jd - off)[d - off] = val;
                j = model.dof_parent[jd];
            }
            let arm = model.joints[model.dof_joint[d]].armature;
            m.row_mut(d - off)[d - off] += arm;
        }
    }
    m
}

/// Full joint-space mass matrix.
pub fn mass_matrix(model: &Model, kin: &Kinematics) -> DenseMat {
    let mut m = DenseMat::zeros(model.nv, model.nv);
    for t in 0..model.trees.len() {
        let block = tree_mass_matrix(model, kin, t);
        let off = model.trees[t].dofs.start;
        for i in 0..block.nrows() {
            for j in 0..block.ncols() {
                m.row_mut(off + i)[off + j] = block[(i, j)];
            }
        }
    }
    m
}

/// Coriolis, centrifugal and gravity forces (recursive Newton-Euler with
/// zero joint acceleration). Gravity enters with the sign that makes a free
/// body accelerate at `g` once `c` is subtracted.
pub fn bias_forces(model: &Model, state: &State, kin: &Kinematics) -> Vec<f64> {
    let nb = model.nbody();
    let inertia = body_inertias(model, kin);
    let mut acc = vec![Motion::ZERO; nb];
    acc[0] = Motion::new(crate::linalg::Vec3::ZERO, -model.opt.gravity);
    let mut force = vec![Force::default(); nb];
    for b in 1..nb {
        let body = &model.bodies[b];
        let mut a = acc[body.parent];
        for d in body.dofs.clone() {
            a += kin.cdof_dot[d] * state.v[d];
        }
        acc[b] = a;
        let iv = inertia[b].apply(&kin.cvel[b]);
        force[b] = inertia[b].apply(&a) + kin.cvel[b].cross_force(&iv);
    }
    for b in (1..nb).rev() {
        let p = model.bodies[b].parent;
        if p != 0 {
            let f = force[b];
            force[p] += f;
        }
    }
    (0..model.nv).map(|d| kin.cdof[d].dot(&force[model.dof_body[d]])).collect()
}

/// Actuator forces plus joint springs and damping.
pub fn actuator_torques(model: &Model, state: &State, ctrl: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    if ctrl.len() != model.nu() {
        return Err(DynamicsError::CtrlLengthMismatch {
            expected: model.nu(),
            got: ctrl.len(),
        });
    }
    let mut tau = vec![0.0; model.nv];
    for (a, &u) in model.actuators.iter().zip(ctrl) {
        let j = &model.joints[a.joint];
        let q = state.q[j.qpos_adr];
        let qd = state.v[j.dof_adr];
        let u = match a.ctrlrange {
            Some((lo, hi)) => u.clamp(lo, hi),
            None => u,
        };
        let f = match a.kind {
            ActuatorKind::Motor => a.gear * u,
            ActuatorKind::Position => a.gear * (a.kp * (u - q) - a.kv * qd),
            ActuatorKind::Velocity => a.gear * a.kv * (u - qd),
            ActuatorKind::General => a.gear * (a.gain * u + a.bias[0] + a.bias[1] * q + a.bias[2] * qd),
        };
        let f = match a.forcerange {
            Some((lo, hi)) => f.clamp(lo, hi),
            None => f,
        };
        tau[j.dof_adr] += f;
    }
    for j in &model.joints {
        if matches!(j.kind, JointKind::Hinge | JointKind::Slide) {
            let q = state.q[j.qpos_adr];
            tau[j.dof_adr] -= j.stiffness * (q - j.springref);
        }
        for d in j.dof_adr..j.dof_adr + j.kind.nv() {
            tau[d] -= j.damping * state.v[d];
        }
    }
    Ok(tau)
}

/// `ṽ = v + h·M⁻¹(τ − c)` with a dense factorization of `M`.
pub fn free_velocity(m: &DenseMat, c: &[f64], tau: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>, LinalgError> {
    let chol = m.cholesky()?;
    let rhs: Vec<f64> = tau.iter().zip(c).map(|(t, c)| t - c).collect();
    let acc = chol.solve(&rhs);
    Ok(v.iter().zip(acc).map(|(v, a)| v + h * a).collect())
}

/// Mass matrix block and its factor for one tree.
#[derive(Clone, Debug)]
pub struct TreeBlock {
    pub dofs: Range<usize>,
    pub mass: DenseMat,
    pub factor: Cholesky,
}

/// Per-step dynamics quantities. The mass matrix is kept per tree since
/// different trees never couple through inertia.
#[derive(Clone, Debug)]
pub struct DynamicsTerms {
    pub trees: Vec<TreeBlock>,
    pub c: Vec<f64>,
    pub tau: Vec<f64>,
    pub v_free: Vec<f64>,
}

impl DynamicsTerms {
    pub fn compute(model: &Model, state: &State, kin: &Kinematics, ctrl: &[f64], h: f64, pool: &Pool) -> Result<Self, DynamicsError> {
        let c = bias_forces(model, state, kin);
        let tau = actuator_torques(model, state, ctrl)?;
        let blocks = pool.map_range(model.trees.len(), |t| -> Result<(TreeBlock, Vec<f64>), LinalgError> {
            let mass = tree_mass_matrix(model, kin, t);
            let factor = mass.cholesky()?;
            let dofs = model.trees[t].dofs.clone();
            let rhs: Vec<f64> = dofs.clone().map(|d| tau[d] - c[d]).collect();
            let acc = factor.solve(&rhs);
            let vf = dofs.clone().zip(acc).map(|(d, a)| state.v[d] + h * a).collect();
            Ok((TreeBlock { dofs, mass, factor }, vf))
        });
        let mut v_free = state.v.clone();
        let mut trees = Vec::with_capacity(blocks.len());
        for b in blocks {
            let (block, vf) = b?;
            v_free[block.dofs.clone()].copy_from_slice(&vf);
            trees.push(block);
        }
        Ok(DynamicsTerms { trees, c, tau, v_free })
    }

    /// Dense `nv×nv` mass matrix.
    pub fn mass_dense(&self, nv: usize) -> DenseMat {
        let mut m = DenseMat::zeros(nv, nv);
        for t in &self.trees {
            let off = t.dofs.start;
            for i in 0..t.mass.nrows() {
                for j in 0..t.mass.ncols() {
                    m.row_mut(off + i)[off + j] = t.mass[(i, j)];
                }
            }
        }
        m
    }

    /// Solves `M x = rhs` restricted to the given tree.
    pub fn solve_tree(&self, tree: usize, rhs: &mut [f64]) {
        self.trees[tree].factor.solve_in_place(rhs);
    }
}
