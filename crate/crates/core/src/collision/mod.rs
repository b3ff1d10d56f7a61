//! Broadphase, narrowphase contact generation and persistent manifolds.
//!
//! Contact normals point from the second geom of a pair toward the first,
//! so moving geom 1 along the normal separates the pair. `depth` is positive
//! when the geoms overlap; points are kept while `depth > -margin`.

mod boxbox;
mod kernels;
mod manifold;

use thiserror::Error;

use crate::dynamics::{Aabb, Kinematics};
use crate::linalg::{Transform, Vec3};
use crate::model::{GeomKind, Model};

pub use manifold::{update_manifolds, ContactManifold, ManifoldStore, MATCH_DISTANCE};

/// Maximum points kept per geom pair.
pub const MAX_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("no contact kernel for {0} vs {1}")]
    UnsupportedGeomPair(&'static str, &'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactPoint {
    pub pos: Vec3,
    /// Unit normal from geom2 toward geom1.
    pub normal: Vec3,
    /// Penetration depth, negative for a gap.
    pub depth: f64,
    pub geom1: usize,
    pub geom2: usize,
    /// Kernel-specific code for the face/edge/vertex that produced the point.
    pub feature: u32,
    pub friction: f64,
    pub solref: [f64; 2],
    pub solimp: [f64; 5],
    pub condim: usize,
    pub restitution: f64,
}

/// A geom placed in the world.
#[derive(Clone, Copy, Debug)]
pub struct GeomPose {
    pub kind: GeomKind,
    pub size: [f64; 3],
    pub x: Transform,
}

/// Kernel output before pair parameters are attached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RawContact {
    pub pos: Vec3,
    pub normal: Vec3,
    pub depth: f64,
    pub feature: u32,
}

impl RawContact {
    fn flipped(self) -> Self {
        RawContact {
            normal: -self.normal,
            ..self
        }
    }
}

fn excluded(model: &Model, g1: usize, g2: usize) -> bool {
    let (k1, k2) = (model.geoms[g1].kind, model.geoms[g2].kind);
    if !k1.collides() || !k2.collides() || (k1 == GeomKind::Plane && k2 == GeomKind::Plane) {
        return true;
    }
    let (b1, b2) = (model.geoms[g1].body, model.geoms[g2].body);
    if b1 == b2 {
        return true;
    }
    if model.bodies[b1].is_static() && model.bodies[b2].is_static() {
        return true;
    }
    let (p1, p2) = (model.bodies[b1].parent, model.bodies[b2].parent);
    (p1 == b2 && b2 != 0) || (p2 == b1 && b1 != 0)
}

/// Candidate geom pairs `(g1, g2)` with `g1 < g2`, sorted.
pub fn broadphase(model: &Model, kin: &Kinematics) -> Vec<(usize, usize)> {
    broadphase_aabbs(model, &kin.geom_aabb, model.opt.margin)
}

pub(crate) fn broadphase_aabbs(model: &Model, aabbs: &[Aabb], margin: f64) -> Vec<(usize, usize)> {
    let n = aabbs.len();
    let boxes: Vec<Aabb> = aabbs.iter().map(|a| a.inflate(margin)).collect();
    let mut out = Vec::new();
    if n <= 64 {
        for i in 0..n {
            for j in i + 1..n {
                if boxes[i].overlaps(&boxes[j]) && !excluded(model, i, j) {
                    out.push((i, j));
                }
            }
        }
        return out;
    }
    // sweep and prune on x; unbounded geoms are tested against everything
    let (mut unbounded, mut finite): (Vec<usize>, Vec<usize>) =
        (0..n).partition(|&i| !boxes[i].min.x.is_finite() || !boxes[i].max.x.is_finite());
    finite.sort_by(|&a, &b| boxes[a].min.x.total_cmp(&boxes[b].min.x).then(a.cmp(&b)));
    let mut active: Vec<usize> = Vec::new();
    for &i in &finite {
        active.retain(|&j| boxes[j].max.x >= boxes[i].min.x);
        for &j in &active {
            if boxes[i].overlaps(&boxes[j]) && !excluded(model, i, j) {
                out.push((i.min(j), i.max(j)));
            }
        }
        active.push(i);
    }
    unbounded.sort_unstable();
    for &u in &unbounded {
        for j in 0..n {
            if j != u && (!unbounded.contains(&j) || j > u) && boxes[u].overlaps(&boxes[j]) && !excluded(model, u, j) {
                out.push((u.min(j), u.max(j)));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn rank(k: GeomKind) -> u8 {
    match k {
        GeomKind::Plane => 0,
        GeomKind::Sphere => 1,
        GeomKind::Capsule => 2,
        GeomKind::Cylinder => 3,
        GeomKind::Box => 4,
        GeomKind::Mesh => 5,
        GeomKind::Hfield => 6,
    }
}

/// Runs the kernel for `a` against `b` in canonical order, where `a` has the
/// higher type rank. Returns `None` for missing kernels.
fn canonical(a: &GeomPose, b: &GeomPose, margin: f64) -> Option<Vec<RawContact>> {
    use GeomKind::*;
    Some(match (a.kind, b.kind) {
        (Sphere, Sphere) => kernels::sphere_sphere(a, b, margin),
        (Sphere, Plane) => kernels::sphere_plane(a, b, margin),
        (Capsule, Plane) => kernels::capsule_plane(a, b, margin),
        (Capsule, Sphere) => kernels::capsule_sphere(a, b, margin),
        (Capsule, Capsule) => kernels::capsule_capsule(a, b, margin),
        (Cylinder, Plane) => kernels::cylinder_plane(a, b, margin),
        (Box, Plane) => kernels::box_plane(a, b, margin),
        (Box, Sphere) => kernels::box_sphere(a, b, margin),
        (Box, Capsule) => kernels::box_capsule(a, b, margin),
        (Box, Box) => boxbox::box_box(a, b, margin),
        _ => return None,
    })
}

/// Contacts between two placed geoms, normals from `b` toward `a`.
/// Swapping the arguments negates every normal and keeps everything else.
pub fn collide(a: &GeomPose, b: &GeomPose, margin: f64) -> Result<Vec<RawContact>, CollisionError> {
    collide_ordered(a, b, margin, false)
}

fn collide_ordered(a: &GeomPose, b: &GeomPose, margin: f64, b_first: bool) -> Result<Vec<RawContact>, CollisionError> {
    let swap = rank(a.kind) < rank(b.kind) || (rank(a.kind) == rank(b.kind) && b_first);
    let (p, q) = if swap { (b, a) } else { (a, b) };
    let raw = canonical(p, q, margin).ok_or(CollisionError::UnsupportedGeomPair(a.kind.name(), b.kind.name()))?;
    Ok(if swap {
        raw.into_iter().map(RawContact::flipped).collect()
    } else {
        raw
    })
}

pub fn geom_pose(model: &Model, kin: &Kinematics, g: usize) -> GeomPose {
    GeomPose {
        kind: model.geoms[g].kind,
        size: model.geoms[g].size,
        x: kin.geom_xform[g],
    }
}

/// Contact points for one geom pair, with combined material parameters.
pub fn narrowphase(model: &Model, kin: &Kinematics, g1: usize, g2: usize) -> Result<Vec<ContactPoint>, CollisionError> {
    let margin = model.opt.margin;
    let (a, b) = (geom_pose(model, kin, g1), geom_pose(model, kin, g2));
    // same-kind pairs always run with the lower geom id first
    let raw = collide_ordered(&a, &b, margin, g2 < g1)?;
    let (ga, gb) = (&model.geoms[g1], &model.geoms[g2]);
    let (friction, solref, solimp) = match &model.opt.contact_override {
        Some(o) => (o.friction[0], o.solref, o.solimp),
        None => {
            let mut solref = [0.0; 2];
            let mut solimp = [0.0; 5];
            for i in 0..2 {
                solref[i] = 0.5 * (ga.solref[i] + gb.solref[i]);
            }
            for i in 0..5 {
                solimp[i] = 0.5 * (ga.solimp[i] + gb.solimp[i]);
            }
            (ga.friction[0].max(gb.friction[0]), solref, solimp)
        }
    };
    Ok(raw
        .into_iter()
        .map(|r| ContactPoint {
            pos: r.pos,
            normal: r.normal,
            depth: r.depth,
            geom1: g1,
            geom2: g2,
            feature: r.feature,
            friction,
            solref,
            solimp,
            condim: ga.condim.max(gb.condim),
            restitution: ga.restitution.max(gb.restitution),
        })
        .collect())
}

/// Keeps at most four points spanning the largest area, deepest first.
pub(crate) fn reduce(points: Vec<RawContact>, normal: Vec3) -> Vec<RawContact> {
    if points.len() <= MAX_POINTS {
        return points;
    }
    let deepest = (0..points.len())
        .max_by(|&i, &j| points[i].depth.total_cmp(&points[j].depth).then(j.cmp(&i)))
        .unwrap_or(0);
    let pick = |chosen: &[usize], score: &dyn Fn(usize) -> f64| -> usize {
        let mut best = None;
        let mut best_s = f64::NEG_INFINITY;
        for i in 0..points.len() {
            if chosen.contains(&i) {
                continue;
            }
            let s = score(i);
            if s > best_s + 1e-15 {
                best_s = s;
                best = Some(i);
            }
        }
        best.unwrap_or(0)
    };
    let mut chosen = vec![deepest];
    let p0 = points[deepest].pos;
    let i1 = pick(&chosen, &|i| (points[i].pos - p0).norm_squared());
    chosen.push(i1);
    let p1 = points[i1].pos;
    let i2 = pick(&chosen, &|i| (p1 - p0).cross(points[i].pos - p0).dot(normal).abs());
    chosen.push(i2);
    let p2 = points[i2].pos;
    let tri = [p0, p1, p2];
    let orient = (p1 - p0).cross(p2 - p0).dot(normal).signum();
    let i3 = pick(&chosen, &|i| {
        let p = points[i].pos;
        // area gained outside the triangle
        (0..3)
            .map(|e| {
                let (u, w) = (tri[e], tri[(e + 1) % 3]);
                -orient * (w - u).cross(p - u).dot(normal)
            })
            .fold(0.0, f64::max)
    });
    chosen.push(i3);
    chosen.into_iter().map(|i| points[i]).collect()
}
