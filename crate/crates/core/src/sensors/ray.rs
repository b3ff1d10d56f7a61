//! Ray intersection with collision primitives.
//!
//! Every kernel works in the geom's local frame and returns the smallest
//! `t ≥ 0` at which the ray meets the surface. A ray starting inside a
//! solid reports where it leaves.

use crate::collision::GeomPose;
use crate::dynamics::{Aabb, Kinematics};
use crate::linalg::Vec3;
use crate::model::{GeomKind, Model};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub geom: usize,
    pub point: Vec3,
}

fn smallest_nonneg(ts: impl IntoIterator<Item = f64>) -> Option<f64> {
    ts.into_iter()
        .filter(|t| t.is_finite() && *t >= 0.0)
        .fold(None, |acc, t| match acc {
            Some(a) if a <= t => Some(a),
            _ => Some(t),
        })
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let s = disc.sqrt();
    // numerically stable pair
    let q = -0.5 * (b + b.signum() * s);
    let (mut t0, mut t1) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    Some((t0, t1))
}

pub fn ray_sphere(o: Vec3, d: Vec3, r: f64) -> Option<f64> {
    let (t0, t1) = quadratic_roots(d.dot(d), 2.0 * o.dot(d), o.dot(o) - r * r)?;
    smallest_nonneg([t0, t1])
}

/// Plane `z = 0`, hit from either side.
pub fn ray_plane(o: Vec3, d: Vec3) -> Option<f64> {
    if d.z == 0.0 {
        return None;
    }
    smallest_nonneg([-o.z / d.z])
}

/// Box of half-extents `e` by slabs.
pub fn ray_box(o: Vec3, d: Vec3, e: Vec3) -> Option<f64> {
    let (mut tmin, mut tmax) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..3 {
        if d[i] == 0.0 {
            if o[i].abs() > e[i] {
                return None;
            }
        } else {
            let (a, b) = ((-e[i] - o[i]) / d[i], (e[i] - o[i]) / d[i]);
            tmin = tmin.max(a.min(b));
            tmax = tmax.min(a.max(b));
        }
    }
    if tmin > tmax || tmax < 0.0 {
        return None;
    }
    Some(if tmin >= 0.0 { tmin } else { tmax })
}

/// Infinite cylinder side of radius `r` about z, limited to `|z| ≤ hz`.
fn cylinder_side(o: Vec3, d: Vec3, r: f64, hz: f64) -> [f64; 2] {
    let a = d.x * d.x + d.y * d.y;
    let b = 2.0 * (o.x * d.x + o.y * d.y);
    let c = o.x * o.x + o.y * o.y - r * r;
    match quadratic_roots(a, b, c) {
        Some((t0, t1)) => {
            let ok = |t: f64| if (o.z + t * d.z).abs() <= hz { t } else { f64::NAN };
            [ok(t0), ok(t1)]
        }
        None => [f64::NAN; 2],
    }
}

pub fn ray_capsule(o: Vec3, d: Vec3, r: f64, hz: f64) -> Option<f64> {
    let [s0, s1] = cylinder_side(o, d, r, hz);
    let mut ts = vec![s0, s1];
    for cz in [-hz, hz] {
        let oc = o - Vec3::new(0.0, 0.0, cz);
        if let Some((t0, t1)) = quadratic_roots(d.dot(d), 2.0 * oc.dot(d), oc.dot(oc) - r * r) {
            for t in [t0, t1] {
                // cap hits count only beyond the cylinder part
                let z = o.z + t * d.z;
                if (cz > 0.0 && z >= hz) || (cz < 0.0 && z <= -hz) {
                    ts.push(t);
                }
            }
        }
    }
    smallest_nonneg(ts)
}

pub fn ray_cylinder(o: Vec3, d: Vec3, r: f64, hz: f64) -> Option<f64> {
    let [s0, s1] = cylinder_side(o, d, r, hz);
    let mut ts = vec![s0, s1];
    if d.z != 0.0 {
        for cz in [-hz, hz] {
            let t = (cz - o.z) / d.z;
            let p = o + d * t;
            if p.x * p.x + p.y * p.y <= r * r {
                ts.push(t);
            }
        }
    }
    smallest_nonneg(ts)
}

/// Hit distance against one posed geom, `dir` unit-norm.
pub fn ray_geom(g: &GeomPose, origin: Vec3, dir: Vec3) -> Option<f64> {
    let o = g.x.inverse_apply(origin);
    let d = g.x.rotation.inverse_rotate(dir);
    match g.kind {
        GeomKind::Plane => ray_plane(o, d),
        GeomKind::Sphere => ray_sphere(o, d, g.size[0]),
        GeomKind::Capsule => ray_capsule(o, d, g.size[0], g.size[1]),
        GeomKind::Cylinder => ray_cylinder(o, d, g.size[0], g.size[1]),
        GeomKind::Box => ray_box(o, d, Vec3::from_array(g.size)),
        _ => None,
    }
}

/// Entry distance of a ray into an AABB, if it crosses within `max_range`.
fn aabb_hit(b: &Aabb, o: Vec3, d: Vec3, max_range: f64) -> bool {
    let (mut tmin, mut tmax) = (0.0f64, max_range);
    for i in 0..3 {
        if !b.min[i].is_finite() || !b.max[i].is_finite() {
            continue;
        }
        if d[i] == 0.0 {
            if o[i] < b.min[i] || o[i] > b.max[i] {
                return false;
            }
        } else {
            let (a, c) = ((b.min[i] - o[i]) / d[i], (b.max[i] - o[i]) / d[i]);
            tmin = tmin.max(a.min(c));
            tmax = tmax.min(a.max(c));
        }
    }
    tmin <= tmax
}

/// Nearest hit among collision geoms, the caster's own included.
/// `skip` can exclude geoms (e.g. the scanning robot for terrain scans).
pub fn raycast_filtered(
    model: &Model,
    kin: &Kinematics,
    origin: Vec3,
    dir: Vec3,
    max_range: f64,
    skip: impl Fn(usize) -> bool,
) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for (gi, g) in model.geoms.iter().enumerate() {
        if !g.kind.collides() || skip(gi) {
            continue;
        }
        if !aabb_hit(&kin.geom_aabb[gi], origin, dir, max_range) {
            continue;
        }
        let pose = GeomPose {
            kind: g.kind,
            size: g.size,
            x: kin.geom_xform[gi],
        };
        if let Some(t) = ray_geom(&pose, origin, dir) {
            if t <= max_range && best.is_none_or(|b| t < b.distance) {
                best = Some(RayHit {
                    distance: t,
                    geom: gi,
                    point: origin + dir * t,
                });
            }
        }
    }
    best
}

pub fn raycast(model: &Model, kin: &Kinematics, origin: Vec3, dir: Vec3, max_range: f64) -> Option<RayHit> {
    raycast_filtered(model, kin, origin, dir, max_range, |_| false)
}
