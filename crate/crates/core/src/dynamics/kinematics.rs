use super::spatial::Motion;
use super::State;
use crate::linalg::{Quat, Transform, Vec3};
use crate::model::{GeomKind, JointKind, Model};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn inflate(&self, m: f64) -> Aabb {
        Aabb {
            min: self.min - Vec3::splat(m),
            max: self.max + Vec3::splat(m),
        }
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }
}

/// World-frame poses and velocities derived from one state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Kinematics {
    /// Body frames.
    pub xform: Vec<Transform>,
    /// Body centers of mass.
    pub xcom: Vec<Vec3>,
    /// Body spatial velocities.
    pub cvel: Vec<Motion>,
    /// Motion subspace of each dof.
    pub cdof: Vec<Motion>,
    /// Time derivative of each dof's motion subspace times its velocity.
    pub cdof_dot: Vec<Motion>,
    pub geom_xform: Vec<Transform>,
    pub geom_aabb: Vec<Aabb>,
    pub site_xform: Vec<Transform>,
}

impl Kinematics {
    /// Linear velocity of a world point attached to `body`.
    pub fn point_velocity(&self, body: usize, p: Vec3) -> Vec3 {
        self.cvel[body].point_velocity(p)
    }

    pub fn body_pos(&self, body: usize) -> Vec3 {
        self.xform[body].translation
    }

    pub fn body_quat(&self, body: usize) -> Quat {
        self.xform[body].rotation
    }
}

pub(crate) fn geom_aabb(kind: GeomKind, size: [f64; 3], x: &Transform) -> Aabb {
    let c = x.translation;
    let r = x.rotation.to_mat3();
    let ext = match kind {
        GeomKind::Plane => {
            return Aabb {
                min: Vec3::splat(f64::NEG_INFINITY),
                max: Vec3::splat(f64::INFINITY),
            }
        }
        GeomKind::Sphere => Vec3::splat(size[0]),
        GeomKind::Capsule => r.col(2).abs() * size[1] + Vec3::splat(size[0]),
        GeomKind::Box => {
            let e = Vec3::from_array(size);
            Vec3::new(r.row(0).abs().dot(e), r.row(1).abs().dot(e), r.row(2).abs().dot(e))
        }
        GeomKind::Cylinder => {
            let a = r.col(2);
            let radial = Vec3::new(
                (1.0 - a.x * a.x).max(0.0).sqrt(),
                (1.0 - a.y * a.y).max(0.0).sqrt(),
                (1.0 - a.z * a.z).max(0.0).sqrt(),
            );
            a.abs() * size[1] + radial * size[0]
        }
        GeomKind::Mesh | GeomKind::Hfield => Vec3::ZERO,
    };
    Aabb {
        min: c - ext,
        max: c + ext,
    }
}

/// Last dof on the path from `body` to the world, if any.
pub fn last_dof(model: &Model, mut body: usize) -> Option<usize> {
    while body != 0 {
        let b = &model.bodies[body];
        if !b.dofs.is_empty() {
            return Some(b.dofs.end - 1);
        }
        body = b.parent;
    }
    None
}

/// Iterates the dofs that move `body`, leaf to root.
pub fn dof_chain(model: &Model, body: usize) -> impl Iterator<Item = usize> + '_ {
    std::iter::successors(last_dof(model, body), move |&d| model.dof_parent[d])
}

/// Computes body and geom poses, spatial velocities and dof subspaces.
pub fn forward_kinematics(model: &Model, state: &State) -> Kinematics {
    let nb = model.nbody();
    let mut k = Kinematics {
        xform: vec![Transform::IDENTITY; nb],
        xcom: vec![Vec3::ZERO; nb],
        cvel: vec![Motion::ZERO; nb],
        cdof: vec![Motion::ZERO; model.nv],
        cdof_dot: vec![Motion::ZERO; model.nv],
        geom_xform: Vec::with_capacity(model.geoms.len()),
        geom_aabb: Vec::with_capacity(model.geoms.len()),
        site_xform: Vec::with_capacity(model.sites.len()),
    };
    let q = &state.q;
    let v = &state.v;
    for b in 1..nb {
        let body = &model.bodies[b];
        let mut x = k.xform[body.parent] * body.local;
        let mut vel = k.cvel[body.parent];
        for j in body.joints.clone() {
            let joint = &model.joints[j];
            let qa = joint.qpos_adr;
            let da = joint.dof_adr;
            match joint.kind {
                JointKind::Free => {
                    let pos = Vec3::new(q[qa], q[qa + 1], q[qa + 2]);
                    let rot = Quat::new(q[qa + 3], q[qa + 4], q[qa + 5], q[qa + 6]).normalize();
                    x = Transform::new(pos, rot);
                    for i in 0..3 {
                        k.cdof[da + i] = Motion::new(Vec3::ZERO, Vec3::axis(i));
                    }
                    for i in 0..3 {
                        vel += k.cdof[da + i] * v[da + i];
                    }
                    let mut spin = Motion::ZERO;
                    for i in 0..3 {
                        let w = rot.rotate(Vec3::axis(i));
                        let s = Motion::new(w, pos.cross(w));
                        k.cdof[da + 3 + i] = s;
                        k.cdof_dot[da + 3 + i] = vel.cross_motion(&s);
                        spin += s * v[da + 3 + i];
                    }
                    vel += spin;
                }
                JointKind::Ball => {
                    let anchor = x.apply(joint.pos);
                    let rot = Quat::new(q[qa], q[qa + 1], q[qa + 2], q[qa + 3]).normalize();
                    x = x
                        * Transform::from_translation(joint.pos)
                        * Transform::new(Vec3::ZERO, rot)
                        * Transform::from_translation(-joint.pos);
                    let mut spin = Motion::ZERO;
                    for i in 0..3 {
                        let w = x.rotation.rotate(Vec3::axis(i));
                        let s = Motion::new(w, anchor.cross(w));
                        k.cdof[da + i] = s;
                        k.cdof_dot[da + i] = vel.cross_motion(&s);
                        spin += s * v[da + i];
                    }
                    vel += spin;
                }
                JointKind::Hinge => {
                    let anchor = x.apply(joint.pos);
                    let axis = x.rotation.rotate(joint.axis);
                    x = x
                        * Transform::from_translation(joint.pos)
                        * Transform::new(Vec3::ZERO, Quat::from_axis_angle(joint.axis, q[qa]))
                        * Transform::from_translation(-joint.pos);
                    let s = Motion::new(axis, anchor.cross(axis));
                    k.cdof[da] = s;
                    k.cdof_dot[da] = vel.cross_motion(&s);
                    vel += s * v[da];
                }
                JointKind::Slide => {
                    let axis = x.rotation.rotate(joint.axis);
                    x = x * Transform::from_translation(joint.axis * q[qa]);
                    let s = Motion::new(Vec3::ZERO, axis);
                    k.cdof[da] = s;
                    k.cdof_dot[da] = vel.cross_motion(&s);
                    vel += s * v[da];
                }
            }
        }
        k.xform[b] = x;
        k.xcom[b] = x.apply(body.com);
        k.cvel[b] = vel;
    }
    for g in &model.geoms {
        let x = k.xform[g.body] * g.local;
        k.geom_aabb.push(geom_aabb(g.kind, g.size, &x));
        k.geom_xform.push(x);
    }
    for s in &model.sites {
        k.site_xform.push(k.xform[s.body] * s.local);
    }
    k
}

/// Translational (rows 0..3) and rotational (rows 3..6) Jacobian of a world
/// point attached to `body`, as sparse `(dof, linear, angular)` columns.
pub fn point_jacobian(model: &Model, kin: &Kinematics, body: usize, p: Vec3) -> Vec<(usize, Vec3, Vec3)> {
    dof_chain(model, body)
        .map(|d| {
            let s = kin.cdof[d];
            (d, s.point_velocity(p), s.w)
        })
        .collect()
}
