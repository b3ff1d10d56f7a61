mod common;

use common::*;
use playground_core::batch::{batch_reset, export_poses, BatchPoses};
use playground_core::exec::Pool;
use playground_core::linalg::Quat;
use playground_core::mjcf::load_model;
use playground_core::rlgk::{bind_template, sync_batch, sync_env, Assignment, PointCloud};
use rand::Rng;

#[test]
fn batch_matches_scalar_reference_loop() {
    let mut r = rng(41);
    let model = load_model(ROBOT).unwrap();
    let (b, m) = (16, 10_000);
    let tmpl = random_template(&mut r, &model, m);
    let poses = random_poses(&mut r, b, model.nbody());
    let out = sync_batch(&tmpl, &poses, &Pool::new(0)).unwrap();
    let (mut dp, mut dq) = (0.0f64, 0.0f64);
    for e in 0..b {
        for i in 0..m {
            let (t, q) = poses.pose(e, tmpl.index_map[i]);
            let p = apply(rot(q), tmpl.p_local[i], t);
            let o = qmul(q.to_array(), tmpl.q_local[i].to_array());
            dp = dp.max((out.position(e, i) - p).max_abs());
            dq = dq.max(quat_angle(out.orientation(e, i).to_array(), o));
        }
    }
    assert!(dp < 1e-12, "position error {dp}");
    assert!(dq < 1e-9, "orientation error {dq}");
}

#[test]
fn rigid_motions_carry_bound_points() {
    let mut r = rng(42);
    let model = load_model(ROBOT).unwrap();
    let tmpl = random_template(&mut r, &model, 500);
    for case in 0..100 {
        let base = random_poses(&mut r, 1, model.nbody());
        let (tt, tq) = (unit(&mut r) * r.random_range(0.0..5.0), quat(&mut r));
        // moving every body by T must move every point by exactly T
        let mut moved = BatchPoses::new(1, model.nbody());
        for k in 0..model.nbody() {
            let (p, q) = base.pose(0, k);
            moved.set_pose(
                0,
                k,
                apply(rot(tq), p, tt),
                Quat::from_array(qmul(tq.to_array(), q.to_array())).normalize(),
            );
        }
        let a = sync_batch(&tmpl, &base, &Pool::sequential()).unwrap();
        let b = sync_batch(&tmpl, &moved, &Pool::sequential()).unwrap();
        for i in 0..tmpl.len() {
            let want = apply(rot(tq), a.position(0, i), tt);
            assert!((b.position(0, i) - want).max_abs() < 1e-12, "case {case} point {i}");
            let wq = qmul(tq.to_array(), a.orientation(0, i).to_array());
            assert!(quat_angle(b.orientation(0, i).to_array(), wq) < 1e-9, "case {case} point {i}");
        }
    }
}

#[test]
fn each_batch_row_equals_single_env_sync() {
    let mut r = rng(43);
    let model = load_model(ROBOT).unwrap();
    let tmpl = random_template(&mut r, &model, 2_000);
    let poses = random_poses(&mut r, 9, model.nbody());
    for workers in [1, 3] {
        let out = sync_batch(&tmpl, &poses, &Pool::new(workers)).unwrap();
        for e in 0..poses.b {
            let mut p = vec![0.0; tmpl.len() * 3];
            let mut q = vec![0.0; tmpl.len() * 4];
            sync_env(&tmpl, poses.env(e), &mut p, &mut q);
            let m = tmpl.len();
            assert_eq!(out.positions[e * m * 3..(e + 1) * m * 3], p[..]);
            assert_eq!(out.orientations[e * m * 4..(e + 1) * m * 4], q[..]);
        }
    }
}

#[test]
fn binding_then_syncing_at_the_bind_pose_is_identity() {
    let mut r = rng(44);
    let model = load_model(ROBOT).unwrap();
    let m = 1_000;
    let mut cloud = PointCloud::new((0..m).map(|_| unit(&mut r)).collect());
    cloud.orientations = (0..m).map(|_| quat(&mut r)).collect();
    let tmpl = bind_template(&cloud, &model, &Assignment::PerPoint((0..m).map(|i| i % model.nbody()).collect())).unwrap();
    let bs = batch_reset(&model, 1, 0, |_, _, _| {});
    let poses = export_poses(&model, &bs, &Pool::sequential());
    let out = sync_batch(&tmpl, &poses, &Pool::sequential()).unwrap();
    for i in 0..m {
        assert!((out.position(0, i) - cloud.positions[i]).max_abs() < 1e-12);
        assert!(quat_angle(out.orientation(0, i).to_array(), cloud.orientations[i].to_array()) < 1e-9);
    }
}
