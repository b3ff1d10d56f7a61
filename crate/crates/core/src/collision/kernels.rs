use super::{reduce, GeomPose, RawContact};
use crate::linalg::Vec3;

fn sphere_pair(ca: Vec3, ra: f64, cb: Vec3, rb: f64, margin: f64, feature: u32) -> Option<RawContact> {
    let d = ca - cb;
    let dist = d.norm();
    let depth = ra + rb - dist;
    if depth <= -margin {
        return None;
    }
    let normal = if dist > 1e-12 { d / dist } else { Vec3::Z };
    let pos = ((ca - normal * ra) + (cb + normal * rb)) * 0.5;
    Some(RawContact {
        pos,
        normal,
        depth,
        feature,
    })
}

fn plane_frame(p: &GeomPose) -> (Vec3, Vec3) {
    (p.x.translation, p.x.rotation.rotate(Vec3::Z))
}

/// Sphere of radius `r` at `c` against a plane.
fn point_plane(c: Vec3, r: f64, origin: Vec3, n: Vec3, margin: f64, feature: u32) -> Option<RawContact> {
    let dist = n.dot(c - origin);
    let depth = r - dist;
    if depth <= -margin {
        return None;
    }
    Some(RawContact {
        pos: c - n * ((r + dist) * 0.5),
        normal: n,
        depth,
        feature,
    })
}

fn segment(p: &GeomPose) -> (Vec3, Vec3) {
    let axis = p.x.rotation.rotate(Vec3::Z) * p.size[1];
    (p.x.translation - axis, p.x.translation + axis)
}

pub fn sphere_sphere(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    sphere_pair(a.x.translation, a.size[0], b.x.translation, b.size[0], margin, 0)
        .into_iter()
        .collect()
}

pub fn sphere_plane(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    let (o, n) = plane_frame(b);
    point_plane(a.x.translation, a.size[0], o, n, margin, 0).into_iter().collect()
}

pub fn capsule_plane(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    let (o, n) = plane_frame(b);
    let (p0, p1) = segment(a);
    [(p0, 0), (p1, 1)]
        .into_iter()
        .filter_map(|(p, f)| point_plane(p, a.size[0], o, n, margin, f))
        .collect()
}

/// Closest point parameter on segment `p + t·d`, `t ∈ [0, 1]`, to `x`.
fn closest_on_segment(p: Vec3, d: Vec3, x: Vec3) -> f64 {
    let dd = d.norm_squared();
    if dd < 1e-24 {
        return 0.0;
    }
    ((x - p).dot(d) / dd).clamp(0.0, 1.0)
}

/// Closest parameters `(s, t)` between segments `p1 + s·d1` and `p2 + t·d2`.
pub(crate) fn segment_segment(p1: Vec3, d1: Vec3, p2: Vec3, d2: Vec3) -> (f64, f64) {
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(r);
    if a < 1e-24 && e < 1e-24 {
        return (0.0, 0.0);
    }
    if a < 1e-24 {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(r);
    if e < 1e-24 {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }
    let b = d1.dot(d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-14 * a * e {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

pub fn capsule_sphere(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    let (p0, p1) = segment(a);
    let t = closest_on_segment(p0, p1 - p0, b.x.translation);
    let c = p0 + (p1 - p0) * t;
    sphere_pair(c, a.size[0], b.x.translation, b.size[0], margin, 0)
        .into_iter()
        .collect()
}

pub fn capsule_capsule(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    let (a0, a1) = segment(a);
    let (b0, b1) = segment(b);
    let (da, db) = (a1 - a0, b1 - b0);
    let (ra, rb) = (a.size[0], b.size[0]);
    let parallel = da.cross(db).norm_squared() < 1e-12 * da.norm_squared() * db.norm_squared();
    if parallel && da.norm_squared() > 1e-24 {
        let l2 = da.norm_squared();
        let t0 = (b0 - a0).dot(da) / l2;
        let t1 = (b1 - a0).dot(da) / l2;
        let lo = t0.min(t1).max(0.0);
        let hi = t0.max(t1).min(1.0);
        if hi - lo > 1e-9 {
            return [(lo, 1), (hi, 2)]
                .into_iter()
                .filter_map(|(s, f)| {
                    let pa = a0 + da * s;
                    let t = closest_on_segment(b0, db, pa);
                    sphere_pair(pa, ra, b0 + db * t, rb, margin, f)
                })
                .collect();
        }
    }
    let (s, t) = segment_segment(a0, da, b0, db);
    sphere_pair(a0 + da * s, ra, b0 + db * t, rb, margin, 0).into_iter().collect()
}

pub fn cylinder_plane(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    let (o, n) = plane_frame(b);
    let r = a.x.rotation.to_mat3();
    let (ex, ey, ez) = (r.col(0), r.col(1), r.col(2));
    let (rad, hl) = (a.size[0], a.size[1]);
    let mut pts = Vec::new();
    // lowest rim point along -n, exact when the cylinder lies on its side
    let down = -n - ez * (-n).dot(ez);
    let down = if down.norm() > 1e-9 { down.normalize() } else { Vec3::ZERO };
    for (rim, side) in [(0u32, -1.0), (1u32, 1.0)] {
        let center = a.x.translation + ez * (side * hl);
        for k in 0..8u32 {
            let ang = k as f64 * std::f64::consts::FRAC_PI_4;
            let p = center + (ex * ang.cos() + ey * ang.sin()) * rad;
            if let Some(c) = point_plane(p, 0.0, o, n, margin, rim * 8 + k) {
                pts.push(c);
            }
        }
        if down != Vec3::ZERO {
            if let Some(c) = point_plane(center + down * rad, 0.0, o, n, margin, 16 + rim) {
                pts.push(c);
            }
        }
    }
    reduce(pts, n)
}

pub fn box_plane(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    let (o, n) = plane_frame(b);
    let mut pts = Vec::new();
    for k in 0..8u32 {
        let local = Vec3::new(
            if k & 1 == 0 { -a.size[0] } else { a.size[0] },
            if k & 2 == 0 { -a.size[1] } else { a.size[1] },
            if k & 4 == 0 { -a.size[2] } else { a.size[2] },
        );
        if let Some(c) = point_plane(a.x.apply(local), 0.0, o, n, margin, k) {
            pts.push(c);
        }
    }
    reduce(pts, n)
}

/// Sphere at world point `c` against box `bx`; normal from the box toward the sphere.
pub(crate) fn sphere_box_contact(c: Vec3, r: f64, bx: &GeomPose, margin: f64) -> Option<RawContact> {
    let p = bx.x.inverse_apply(c);
    let e = Vec3::from_array(bx.size);
    let mut q = p;
    let mut region = 0u32;
    for i in 0..3 {
        let code = if p[i] < -e[i] {
            q[i] = -e[i];
            1
        } else if p[i] > e[i] {
            q[i] = e[i];
            2
        } else {
            0
        };
        region = region * 3 + code;
    }
    let (n_local, depth, surf, feature) = if region != 0 {
        let d = p - q;
        let dist = d.norm();
        (d / dist, r - dist, q, region)
    } else {
        let mut face = 0;
        let mut best = f64::INFINITY;
        for i in 0..3 {
            let gap = e[i] - p[i].abs();
            if gap < best {
                best = gap;
                face = i;
            }
        }
        let sign = if p[face] >= 0.0 { 1.0 } else { -1.0 };
        let mut surf = p;
        surf[face] = sign * e[face];
        (
            Vec3::axis(face) * sign,
            r + best,
            surf,
            27 + 2 * face as u32 + u32::from(sign > 0.0),
        )
    };
    if depth <= -margin {
        return None;
    }
    let normal = bx.x.rotation.rotate(n_local);
    let surf_w = bx.x.apply(surf);
    let pos = ((c - normal * r) + surf_w) * 0.5;
    Some(RawContact {
        pos,
        normal,
        depth,
        feature,
    })
}

pub fn box_sphere(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    sphere_box_contact(b.x.translation, b.size[0], a, margin)
        .map(RawContact::flipped)
        .into_iter()
        .collect()
}

/// Squared distance from a world point to a box surface or interior.
fn box_distance(p: Vec3, bx: &GeomPose) -> f64 {
    let l = bx.x.inverse_apply(p);
    let mut d2 = 0.0;
    for i in 0..3 {
        let excess = l[i].abs() - bx.size[i];
        if excess > 0.0 {
            d2 += excess * excess;
        }
    }
    d2
}

pub fn box_capsule(a: &GeomPose, b: &GeomPose, margin: f64) -> Vec<RawContact> {
    let (p0, p1) = segment(b);
    let d = p1 - p0;
    // the distance to a convex set is convex along a segment
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if box_distance(p0 + d * m1, a) <= box_distance(p0 + d * m2, a) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t_star = 0.5 * (lo + hi);
    let mut out = Vec::new();
    for (t, f) in [(0.0, 0u32), (1.0, 1), (t_star, 2)] {
        if f == 2 && (t_star < 1e-6 || t_star > 1.0 - 1e-6) && !out.is_empty() {
            continue;
        }
        if let Some(c) = sphere_box_contact(p0 + d * t, b.size[0], a, margin) {
            out.push(RawContact {
                feature: f * 64 + c.feature,
                ..c.flipped()
            });
        }
    }
    out
}
