mod common;

use common::*;
use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use playground_core::batch::Env;
use playground_core::collision::GeomPose;
use playground_core::exec::Pool;
use playground_core::linalg::Transform;
use playground_core::mjcf::load_model;
use playground_core::model::GeomKind;
use playground_core::scenario::scenes;
use playground_core::sensors::{contact_forces, ray_geom};
use playground_core::solver::SolverOptions;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Signed distance in the geom frame.
fn sdf(kind: GeomKind, s: [f64; 3], p: Vector3<f64>) -> f64 {
    let boxed = |q: Vector3<f64>, e: Vector3<f64>| {
        let d = q.abs() - e;
        d.map(|x| x.max(0.0)).norm() + d.max().min(0.0)
    };
    match kind {
        GeomKind::Sphere => p.norm() - s[0],
        GeomKind::Box => boxed(p, Vector3::from(s)),
        GeomKind::Capsule => (p - Vector3::new(0.0, 0.0, p.z.clamp(-s[1], s[1]))).norm() - s[0],
        GeomKind::Cylinder => {
            let d = [p.xy().norm() - s[0], p.z.abs() - s[1]];
            d[0].max(d[1]).min(0.0) + (d[0].max(0.0).powi(2) + d[1].max(0.0).powi(2)).sqrt()
        }
        GeomKind::Plane => p.z,
        _ => unreachable!(),
    }
}

/// First sign change of the distance along the ray, by marching then bisecting.
fn march(f: impl Fn(f64) -> f64, t_max: f64) -> Option<f64> {
    let step = 5e-4;
    let s0 = f(0.0).signum();
    let mut a = 0.0;
    while a < t_max {
        let b = a + step;
        if f(b).signum() != s0 {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..80 {
                let m = 0.5 * (lo + hi);
                if f(m).signum() == s0 {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        a = b;
    }
    None
}

fn random_pose(rng: &mut ChaCha8Rng) -> (Transform, Isometry3<f64>) {
    let t = unit(rng) * rng.random_range(0.0..1.0);
    let q = quat(rng);
    let iso = Isometry3::from_parts(
        Translation3::new(t.x, t.y, t.z),
        UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q.w, q.x, q.y, q.z)),
    );
    (Transform::new(t, q), iso)
}

#[test]
fn ray_distances_match_marched_distance_fields() {
    let mut r = rng(31);
    let shapes = [
        (GeomKind::Sphere, [0.3, 0.0, 0.0]),
        (GeomKind::Box, [0.2, 0.4, 0.1]),
        (GeomKind::Capsule, [0.15, 0.3, 0.0]),
        (GeomKind::Cylinder, [0.25, 0.2, 0.0]),
        (GeomKind::Plane, [1.0, 1.0, 0.1]),
    ];
    for (kind, size) in shapes {
        let (mut hits, mut grazes) = (0, 0);
        let n = 400;
        for case in 0..n {
            let (x, iso) = random_pose(&mut r);
            // start outside, aim near the shape so most rays hit
            let o = loop {
                let o = x.translation + unit(&mut r) * r.random_range(0.6..2.0);
                let lo = iso.inverse_transform_point(&Point3::new(o.x, o.y, o.z)).coords;
                if sdf(kind, size, lo).abs() > 1e-2 {
                    break o;
                }
            };
            let target = x.translation + unit(&mut r) * r.random_range(0.0..0.5);
            let d = (target - o).normalize();
            let (lo, ld) = {
                let p = iso.inverse_transform_point(&Point3::new(o.x, o.y, o.z)).coords;
                (p, iso.inverse_transform_vector(&Vector3::new(d.x, d.y, d.z)))
            };
            let f = |t: f64| sdf(kind, size, lo + ld * t);
            let got = ray_geom(&GeomPose { kind, size, x }, o, d);
            // the plane is unbounded, so look a little past whatever the kernel reported
            let want = march(f, got.map_or(4.0, |t| t.max(3.0) + 1.0).min(200.0));
            match (got, want) {
                (None, None) => {}
                (Some(t), Some(w)) if (t - w).abs() < 1e-9 => hits += 1,
                // a tangent touch can slip between march samples
                (Some(t), w) if f(t).abs() < 1e-9 && w.is_none_or(|w| t < w) => grazes += 1,
                (g, w) => panic!("{kind:?} case {case}: kernel {g:?}, oracle {w:?}"),
            }
        }
        assert!(hits > n / 4, "{kind:?}: only {hits} hits");
        assert!(grazes < n / 100 + 1, "{kind:?}: {grazes} grazes");
    }
}

#[test]
fn resting_stack_contact_forces_carry_the_weight() {
    let model = load_model(&scenes::stack(3, 0, 0.01)).unwrap();
    let mut env = Env::new(&model);
    let opts = SolverOptions::from_model(&model);
    for _ in 0..300 {
        env.step(&model, &[], 0.01, &opts, &Pool::sequential()).unwrap();
    }
    let g = model.opt.gravity.norm();
    let readings = contact_forces(&model, &env.manifolds, &env.constraints, &env.solutions, env.last_h, None);
    // body 1 is the bottom box; the force across each interface carries everything above it
    for (below, above) in [(0usize, 1usize), (1, 2), (2, 3)] {
        let f: f64 = readings
            .iter()
            .filter(|c| c.bodies == (above, below) || c.bodies == (below, above))
            .map(|c| c.normal_force)
            .sum();
        let w: f64 = model.bodies[above..].iter().map(|b| b.mass).sum::<f64>() * g;
        assert!((f - w).abs() < 0.01 * w, "interface {below}/{above}: {f} vs {w}");
    }
    let total: f64 = readings
        .iter()
        .filter(|c| c.bodies.0 == 0 || c.bodies.1 == 0)
        .map(|c| c.normal_force)
        .sum();
    let weight: f64 = model.bodies.iter().map(|b| b.mass).sum::<f64>() * g;
    assert!((total - weight).abs() < 0.01 * weight, "{total} vs {weight}");
}
