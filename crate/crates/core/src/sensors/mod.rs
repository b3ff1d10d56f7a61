//! Observations: contact forces, frame and joint sensors, ray casts.

mod ray;
mod scan;

pub use ray::{ray_box, ray_capsule, ray_cylinder, ray_geom, ray_plane, ray_sphere, raycast, raycast_filtered, RayHit};
pub use scan::{height_scan, lidar_scan, rosette, PatternKind, RayPattern, ScanPoint};

use crate::collision::ManifoldStore;
use crate::dynamics::{forward_kinematics, Kinematics, State};
use crate::linalg::{Quat, Vec3};
use crate::model::{Model, SensorKind, SensorTarget};
use crate::solver::{ConstraintSet, RowKind, Solution};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("sensor {sensor} refers to a missing {what} {index}")]
    UnknownSensorTarget { sensor: usize, what: &'static str, index: usize },
}

/// Force at one contact point. `force` acts on the first geom's body.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactReading {
    pub geoms: (usize, usize),
    pub bodies: (usize, usize),
    pub pos: Vec3,
    pub normal: Vec3,
    pub force: Vec3,
    /// `(pos − reference) × force`.
    pub torque: Vec3,
    pub normal_force: f64,
    pub tangential: [f64; 2],
}

/// Per-point contact forces `λ/h` from the step's impulses, decomposed
/// into the normal and the two tangent directions. Torques are taken about
/// `reference`, or about each contact point when `None`.
pub fn contact_forces(
    model: &Model,
    manifolds: &ManifoldStore,
    cs: &ConstraintSet,
    solutions: &[Solution],
    h: f64,
    reference: Option<Vec3>,
) -> Vec<ContactReading> {
    let mut lambda = vec![0.0; cs.ineq.len()];
    for s in solutions {
        for (&r, &l) in s.ineq_rows.iter().zip(&s.lambda_n) {
            lambda[r] = l;
        }
    }
    let mut out: Vec<ContactReading> = Vec::new();
    for (i, row) in cs.ineq.iter().enumerate() {
        let Some(o) = row.owner else { continue };
        let f = lambda[i] / h;
        match row.kind {
            RowKind::Normal => {
                let m = &manifolds.manifolds[&o.pair];
                let p = &m.points[o.point];
                out.push(ContactReading {
                    geoms: o.pair,
                    bodies: (model.geoms[o.pair.0].body, model.geoms[o.pair.1].body),
                    pos: p.pos,
                    normal: p.normal,
                    force: row.dir * f,
                    torque: Vec3::ZERO,
                    normal_force: f,
                    tangential: [0.0; 2],
                });
            }
            RowKind::Friction => {
                let c = out.last_mut().expect("friction rows follow their normal row");
                c.tangential[o.dir - 1] = f;
                c.force += row.dir * f;
            }
            _ => {}
        }
    }
    for c in &mut out {
        c.torque = (c.pos - reference.unwrap_or(c.pos)).cross(c.force);
    }
    out
}

fn target_frame(model: &Model, kin: &Kinematics, sensor: usize, t: SensorTarget) -> Result<(usize, Vec3, Quat), SensorError> {
    let missing = |what, index| SensorError::UnknownSensorTarget { sensor, what, index };
    Ok(match t {
        SensorTarget::Body(b) if b < model.nbody() => (b, kin.xform[b].translation, kin.xform[b].rotation),
        SensorTarget::Site(s) if s < model.sites.len() => (model.sites[s].body, kin.site_xform[s].translation, kin.site_xform[s].rotation),
        SensorTarget::Geom(g) if g < model.geoms.len() => (model.geoms[g].body, kin.geom_xform[g].translation, kin.geom_xform[g].rotation),
        SensorTarget::Body(i) => return Err(missing("body", i)),
        SensorTarget::Site(i) => return Err(missing("site", i)),
        SensorTarget::Geom(i) => return Err(missing("geom", i)),
        SensorTarget::Joint(i) => return Err(missing("frame for joint", i)),
    })
}

/// Previous step information for finite-difference sensors.
#[derive(Clone, Copy, Debug)]
pub struct PrevStep<'a> {
    pub state: &'a State,
    pub h: f64,
}

/// Values of every model sensor, concatenated in declaration order.
/// The accelerometer reads `(v(t) − v(t−h))/h − g` at the site in the site
/// frame, which is zero in free fall; it reads `−g` before any step.
pub fn frame_sensors(
    model: &Model,
    state: &State,
    kin: &Kinematics,
    prev: Option<PrevStep<'_>>,
    contacts: &[ContactReading],
) -> Result<Vec<f64>, SensorError> {
    let prev_kin = prev.map(|p| forward_kinematics(model, p.state));
    let mut out = Vec::new();
    for (si, s) in model.sensors.iter().enumerate() {
        match s.kind {
            SensorKind::JointPos | SensorKind::JointVel => {
                let SensorTarget::Joint(j) = s.target else {
                    return Err(SensorError::UnknownSensorTarget {
                        sensor: si,
                        what: "joint",
                        index: usize::MAX,
                    });
                };
                let jt = model.joints.get(j).ok_or(SensorError::UnknownSensorTarget {
                    sensor: si,
                    what: "joint",
                    index: j,
                })?;
                out.push(if s.kind == SensorKind::JointPos {
                    state.q[jt.qpos_adr]
                } else {
                    state.v[jt.dof_adr]
                });
            }
            SensorKind::FramePos => {
                let (_, p, _) = target_frame(model, kin, si, s.target)?;
                out.extend(p.to_array());
            }
            SensorKind::FrameQuat => {
                let (_, _, q) = target_frame(model, kin, si, s.target)?;
                out.extend(q.to_array());
            }
            SensorKind::FrameLinVel => {
                let (b, p, _) = target_frame(model, kin, si, s.target)?;
                out.extend(kin.point_velocity(b, p).to_array());
            }
            SensorKind::Velocimeter => {
                let (b, p, q) = target_frame(model, kin, si, s.target)?;
                out.extend(q.inverse_rotate(kin.point_velocity(b, p)).to_array());
            }
            SensorKind::Accelerometer => {
                let (b, p, q) = target_frame(model, kin, si, s.target)?;
                let acc = match (prev, &prev_kin) {
                    (Some(pv), Some(pk)) if pv.h > 0.0 => {
                        let (_, pp, _) = target_frame(model, pk, si, s.target)?;
                        (kin.point_velocity(b, p) - pk.point_velocity(b, pp)) / pv.h
                    }
                    _ => Vec3::ZERO,
                };
                out.extend(q.inverse_rotate(acc - model.opt.gravity).to_array());
            }
            SensorKind::ContactForce => {
                let (b, _, _) = target_frame(model, kin, si, s.target)?;
                let total: f64 = contacts
                    .iter()
                    .filter(|c| c.bodies.0 == b || c.bodies.1 == b)
                    .map(|c| c.normal_force)
                    .sum();
                out.push(total);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
