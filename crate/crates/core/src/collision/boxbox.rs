//! Box-box contact by separating axes with face clipping.

use super::kernels::segment_segment;
use super::{reduce, GeomPose, RawContact};
use crate::linalg::Vec3;

const REL_TOL: f64 = 0.95;
const ABS_TOL: f64 = 1e-5;

struct Box3 {
    c: Vec3,
    axes: [Vec3; 3],
    e: [f64; 3],
}

impl Box3 {
    fn new(g: &GeomPose) -> Self {
        let r = g.x.rotation.to_mat3();
        Box3 {
            c: g.x.translation,
            axes: [r.col(0), r.col(1), r.col(2)],
            e: g.size,
        }
    }

    fn project(&self, l: Vec3) -> f64 {
        (0..3).map(|i| self.e[i] * self.axes[i].dot(l).abs()).sum()
    }
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Normals point from `b` toward `a`.
pub fn box_box(ga: &GeomPose, gb: &GeomPose, margin: f64) -> Vec<RawContact> {
    let a = Box3::new(ga);
    let b = Box3::new(gb);
    let t = b.c - a.c;

    let sep = |l: Vec3| t.dot(l).abs() - a.project(l) - b.project(l);
    let mut best_a = (f64::NEG_INFINITY, 0usize);
    let mut best_b = (f64::NEG_INFINITY, 0usize);
    for k in 0..3 {
        let (sa, sb) = (sep(a.axes[k]), sep(b.axes[k]));
        if sa > margin || sb > margin {
            return Vec::new();
        }
        if sa > best_a.0 {
            best_a = (sa, k);
        }
        if sb > best_b.0 {
            best_b = (sb, k);
        }
    }
    let mut edge = (f64::NEG_INFINITY, 0usize, 0usize);
    for i in 0..3 {
        for j in 0..3 {
            let l = a.axes[i].cross(b.axes[j]);
            let len = l.norm();
            if len < 1e-6 {
                continue;
            }
            let s = sep(l / len);
            if s > margin {
                return Vec::new();
            }
            if s > edge.0 {
                edge = (s, i, j);
            }
        }
    }
    // a later candidate must beat the current one by a relative margin
    let clearly_better = |s: f64, cur: f64| s - cur > ABS_TOL + (1.0 - REL_TOL) * cur.abs();
    let face = if clearly_better(best_b.0, best_a.0) {
        (best_b.0, best_b.1 + 3)
    } else {
        best_a
    };
    if clearly_better(edge.0, face.0) {
        return edge_contact(&a, &b, edge.1, edge.2, edge.0, margin);
    }
    let (ref_is_b, axis) = if face.1 < 3 { (false, face.1) } else { (true, face.1 - 3) };
    let (r, inc) = if ref_is_b { (&b, &a) } else { (&a, &b) };
    face_contact(r, inc, axis, ref_is_b, margin)
}

fn face_contact(r: &Box3, inc: &Box3, axis: usize, ref_is_b: bool, margin: f64) -> Vec<RawContact> {
    let n_ref = r.axes[axis] * sign(r.axes[axis].dot(inc.c - r.c));
    let face_c = r.c + n_ref * r.e[axis];
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let ref_face = 2 * axis as u32 + u32::from(n_ref.dot(r.axes[axis]) > 0.0);

    // incident face: most anti-parallel to the reference normal
    let mut j = 0;
    for k in 1..3 {
        if inc.axes[k].dot(n_ref).abs() > inc.axes[j].dot(n_ref).abs() {
            j = k;
        }
    }
    let s_j = -sign(inc.axes[j].dot(n_ref));
    let inc_face = 2 * j as u32 + u32::from(s_j > 0.0);
    let ic = inc.c + inc.axes[j] * (s_j * inc.e[j]);
    let (k, l) = ((j + 1) % 3, (j + 2) % 3);
    let (dk, dl) = (inc.axes[k] * inc.e[k], inc.axes[l] * inc.e[l]);
    // (point, feature code, line carrying the edge to the next point):
    // lines 0..4 are incident edges, 4..8 the reference side planes
    let mut poly: Vec<(Vec3, u32, u32)> = vec![
        (ic + dk + dl, 0, 0),
        (ic - dk + dl, 1, 1),
        (ic - dk - dl, 2, 2),
        (ic + dk - dl, 3, 3),
    ];

    // clip against the four side planes of the reference face
    let planes = [(r.axes[u], r.e[u]), (-r.axes[u], r.e[u]), (r.axes[v], r.e[v]), (-r.axes[v], r.e[v])];
    for (pi, &(pn, off)) in planes.iter().enumerate() {
        if poly.is_empty() {
            break;
        }
        let dist = |p: Vec3| pn.dot(p - r.c) - off;
        let mut out = Vec::with_capacity(poly.len() + 1);
        for idx in 0..poly.len() {
            let (p, fp, line) = poly[idx];
            let (q, _, _) = poly[(idx + 1) % poly.len()];
            let (dp, dq) = (dist(p), dist(q));
            if dp <= 0.0 {
                out.push((p, fp, line));
            }
            if (dp <= 0.0) != (dq <= 0.0) {
                let s = dp / (dp - dq);
                let next = if dp <= 0.0 { 4 + pi as u32 } else { line };
                out.push((p + (q - p) * s, 8 + 8 * pi as u32 + line, next));
            }
        }
        poly = out;
    }

    let normal = if ref_is_b { n_ref } else { -n_ref };
    let base = (u32::from(ref_is_b) << 28) | (ref_face << 24) | (inc_face << 20);
    let pts: Vec<RawContact> = poly
        .into_iter()
        .filter_map(|(p, f, _)| {
            let d = n_ref.dot(p - face_c);
            (d < margin).then(|| RawContact {
                pos: p - n_ref * (0.5 * d),
                normal,
                depth: -d,
                feature: base | f,
            })
        })
        .collect();
    reduce(pts, normal)
}

fn edge_contact(a: &Box3, b: &Box3, i: usize, j: usize, s: f64, margin: f64) -> Vec<RawContact> {
    let mut n = a.axes[i].cross(b.axes[j]).normalize();
    if n.dot(a.c - b.c) < 0.0 {
        n = -n;
    }
    let mut pa = a.c;
    let mut pb = b.c;
    let mut bits = 0u32;
    for k in 0..3 {
        if k != i {
            let sg = sign(a.axes[k].dot(-n));
            pa += a.axes[k] * (sg * a.e[k]);
            bits |= u32::from(sg > 0.0) << k;
        }
        if k != j {
            let sg = sign(b.axes[k].dot(n));
            pb += b.axes[k] * (sg * b.e[k]);
            bits |= u32::from(sg > 0.0) << (3 + k);
        }
    }
    let (da, db) = (a.axes[i] * (2.0 * a.e[i]), b.axes[j] * (2.0 * b.e[j]));
    let (a0, b0) = (pa - da * 0.5, pb - db * 0.5);
    let (sa, sb) = segment_segment(a0, da, b0, db);
    let (qa, qb) = (a0 + da * sa, b0 + db * sb);
    let depth = -s;
    if depth <= -margin {
        return Vec::new();
    }
    vec![RawContact {
        pos: (qa + qb) * 0.5,
        normal: n,
        depth,
        feature: (1 << 30) | (((i * 3 + j) as u32) << 8) | bits,
    }]
}
