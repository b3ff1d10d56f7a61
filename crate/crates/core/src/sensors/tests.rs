use super::*;
use crate::batch::Env;
use crate::exec::Pool;
use crate::linalg::Transform;
use crate::mjcf::load_model;
use crate::solver::SolverOptions;

fn settle(xml: &str, steps: usize) -> (Model, Env) {
    let model = load_model(xml).unwrap();
    let mut env = Env::new(&model);
    let opts = SolverOptions::from_model(&model);
    let pool = Pool::sequential();
    let ctrl = vec![0.0; model.nu()];
    for _ in 0..steps {
        env.step(&model, &ctrl, model.opt.timestep, &opts, &pool).unwrap();
    }
    (model, env)
}

fn readings(model: &Model, env: &Env) -> Vec<ContactReading> {
    contact_forces(model, &env.manifolds, &env.constraints, &env.solutions, env.last_h, None)
}

#[test]
fn resting_box_normal_forces_balance_weight() {
    let (model, env) = settle(
        r#"<mujoco><option timestep="0.002"/><worldbody><geom type="plane" size="5 5 0.1"/>
        <body pos="0 0 0.1"><freejoint/><geom type="box" size="0.1 0.1 0.1" mass="2"/></body></worldbody></mujoco>"#,
        500,
    );
    let r = readings(&model, &env);
    assert_eq!(r.len(), 4);
    let total: f64 = r.iter().map(|c| c.normal_force).sum();
    assert!((total - 2.0 * 9.81).abs() < 0.01 * 2.0 * 9.81, "{total}");
    for c in &r {
        assert!(c.normal_force >= -1e-9);
        let t = (c.tangential[0].powi(2) + c.tangential[1].powi(2)).sqrt();
        assert!(t <= model.geoms[c.geoms.0].friction[0].max(model.geoms[c.geoms.1].friction[0]) * c.normal_force + 1e-6);
        assert_eq!(c.torque, Vec3::ZERO);
    }
    // about the box centre the point forces cancel in torque
    let centre = env.state.q[0..3].to_vec();
    let r = contact_forces(
        &model,
        &env.manifolds,
        &env.constraints,
        &env.solutions,
        env.last_h,
        Some(Vec3::new(centre[0], centre[1], centre[2])),
    );
    let tau = r.iter().fold(Vec3::ZERO, |a, c| a + c.torque);
    assert!(tau.norm() < 1e-3, "{tau:?}");
}

#[test]
fn frictionless_contact_has_zero_tangential_force() {
    let (model, env) = settle(
        r#"<mujoco><worldbody><geom type="plane" size="5 5 0.1" condim="1"/>
        <body pos="0 0 0.1"><freejoint/><geom type="sphere" size="0.1" condim="1"/></body></worldbody></mujoco>"#,
        200,
    );
    let r = readings(&model, &env);
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].tangential, [0.0, 0.0]);
    assert!(r[0].normal_force > 0.0);
}

#[test]
fn no_contacts_no_readings() {
    let (model, env) = settle(
        r#"<mujoco><worldbody><body pos="0 0 1"><freejoint/><geom type="sphere" size="0.1"/></body></worldbody></mujoco>"#,
        3,
    );
    assert!(readings(&model, &env).is_empty());
}

#[test]
fn joint_and_frame_values() {
    let model = load_model(
        r#"<mujoco><worldbody><body name="a" pos="0 0 1"><joint name="h" type="hinge" axis="0 0 1"/>
        <geom type="capsule" fromto="0 0 0 0.5 0 0" size="0.05"/><site name="tip" pos="0.5 0 0"/></body></worldbody>
        <sensor><jointpos joint="h"/><jointvel joint="h"/><framepos objtype="body" objname="world"/>
        <framepos objtype="site" objname="tip"/><framequat objtype="body" objname="a"/><velocimeter site="tip"/>
        <framelinvel objtype="site" objname="tip"/></sensor></mujoco>"#,
    )
    .unwrap();
    let mut state = State::new(&model);
    state.q[0] = 0.3;
    state.v[0] = 2.0;
    let kin = forward_kinematics(&model, &state);
    let s = frame_sensors(&model, &state, &kin, None, &[]).unwrap();
    assert_eq!(s.len(), 1 + 1 + 3 + 3 + 4 + 3 + 3);
    assert_eq!(s[0], 0.3);
    assert_eq!(s[1], 2.0);
    assert_eq!(&s[2..5], &[0.0, 0.0, 0.0]);
    let tip = [0.5 * 0.3f64.cos(), 0.5 * 0.3f64.sin(), 1.0];
    for k in 0..3 {
        assert!((s[5 + k] - tip[k]).abs() < 1e-12);
    }
    let q = [(0.15f64).cos(), 0.0, 0.0, (0.15f64).sin()];
    for k in 0..4 {
        assert!((s[8 + k] - q[k]).abs() < 1e-12);
    }
    // tip moves tangentially at ω·L; in the site frame that is +y
    assert!((s[12] - 0.0).abs() < 1e-12 && (s[13] - 1.0).abs() < 1e-12 && s[14].abs() < 1e-12);
    let world = [-0.3f64.sin(), 0.3f64.cos(), 0.0];
    for k in 0..3 {
        assert!((s[15 + k] - world[k]).abs() < 1e-12);
    }
}

#[test]
fn accelerometer_reads_zero_in_free_fall_and_g_at_rest() {
    let xml = r#"<mujoco><option timestep="0.002"/><worldbody><geom type="plane" size="5 5 0.1"/>
        <body pos="0 0 2"><freejoint/><geom type="sphere" size="0.1"/><site name="imu"/></body></worldbody>
        <sensor><accelerometer site="imu"/></sensor></mujoco>"#;
    let (model, env) = settle(xml, 50);
    let kin = forward_kinematics(&model, &env.state);
    let prev = PrevStep {
        state: env.prev_state.as_ref().unwrap(),
        h: env.last_h,
    };
    let a = frame_sensors(&model, &env.state, &kin, Some(prev), &[]).unwrap();
    assert!(a.iter().all(|x| x.abs() < 1e-9), "{a:?}");

    let (model, env) = settle(&xml.replace("0 0 2", "0 0 0.1"), 400);
    let kin = forward_kinematics(&model, &env.state);
    let prev = PrevStep {
        state: env.prev_state.as_ref().unwrap(),
        h: env.last_h,
    };
    let a = frame_sensors(&model, &env.state, &kin, Some(prev), &[]).unwrap();
    let up = kin.site_xform[0].rotation.inverse_rotate(Vec3::new(0.0, 0.0, 9.81));
    assert!((Vec3::new(a[0], a[1], a[2]) - up).norm() < 0.05, "{a:?}");
}

#[test]
fn touch_sums_normal_force_on_body() {
    let xml = r#"<mujoco><option timestep="0.002"/><worldbody><geom type="plane" size="5 5 0.1"/>
        <body pos="0 0 0.1"><freejoint/><geom type="box" size="0.1 0.1 0.1" mass="1"/><site name="s"/></body></worldbody>
        <sensor><touch site="s"/></sensor></mujoco>"#;
    let (model, env) = settle(xml, 500);
    let kin = forward_kinematics(&model, &env.state);
    let r = readings(&model, &env);
    let s = frame_sensors(&model, &env.state, &kin, None, &r).unwrap();
    assert!((s[0] - 9.81).abs() < 0.1, "{s:?}");
}

#[test]
fn missing_target_is_reported() {
    let mut model = load_model(
        r#"<mujoco><worldbody><body><joint name="j" type="hinge"/><geom size="0.1"/></body></worldbody>
        <sensor><jointpos joint="j"/></sensor></mujoco>"#,
    )
    .unwrap();
    model.sensors[0].target = crate::model::SensorTarget::Joint(7);
    let state = State::new(&model);
    let kin = forward_kinematics(&model, &state);
    assert_eq!(
        frame_sensors(&model, &state, &kin, None, &[]),
        Err(SensorError::UnknownSensorTarget {
            sensor: 0,
            what: "joint",
            index: 7
        })
    );
}

#[test]
fn ray_examples() {
    assert_eq!(ray_plane(Vec3::new(0.0, 0.0, -1.0), Vec3::Z), Some(1.0));
    assert_eq!(ray_sphere(Vec3::ZERO, Vec3::X, 0.3), Some(0.3));
    let model = load_model(r#"<mujoco><worldbody/></mujoco>"#).unwrap();
    let kin = forward_kinematics(&model, &State::new(&model));
    assert!(raycast(&model, &kin, Vec3::ZERO, Vec3::Z, 10.0).is_none());
    assert_eq!(height_scan(&model, &kin, 0, 3, 2, 0.1, 5.0), vec![-5.0; 6]);
}

#[test]
fn self_occlusion_reports_own_geom() {
    let model = load_model(
        r#"<mujoco><worldbody><geom name="wall" type="box" pos="2 0 0" size="0.1 1 1"/>
        <body name="robot"><freejoint/><geom name="shell" type="sphere" size="0.2"/></body></worldbody></mujoco>"#,
    )
    .unwrap();
    let kin = forward_kinematics(&model, &State::new(&model));
    let hit = raycast(&model, &kin, Vec3::new(-1.0, 0.0, 0.0), Vec3::X, 10.0).unwrap();
    assert_eq!(hit.geom, 1);
    assert!((hit.distance - 0.8).abs() < 1e-12);
}

#[test]
fn height_scan_over_step() {
    let model = load_model(
        r#"<mujoco><worldbody><geom type="plane" size="5 5 0.1"/><geom type="box" pos="0.5 0 0.05" size="0.25 1 0.05"/>
        <body pos="0 0 0.5"><freejoint/><geom type="sphere" size="0.05"/></body></worldbody></mujoco>"#,
    )
    .unwrap();
    let kin = forward_kinematics(&model, &State::new(&model));
    let g = height_scan(&model, &kin, 1, 5, 3, 0.2, 5.0);
    for j in 0..3 {
        for i in 0..5 {
            let x = (i as f64 - 2.0) * 0.2;
            let expect = if (0.25..=0.75).contains(&x) { 0.1 - 0.5 } else { -0.5 };
            assert!((g[j * 5 + i] - expect).abs() < 1e-12, "{i} {j} {}", g[j * 5 + i]);
        }
    }
}

#[test]
fn planar_scan_in_room() {
    let model = load_model(
        r#"<mujoco><worldbody>
        <geom type="box" pos="2 0 0" size="0.1 3 1"/><geom type="box" pos="-2 0 0" size="0.1 3 1"/>
        <geom type="box" pos="0 1 0" size="3 0.1 1"/><geom type="box" pos="0 -1 0" size="3 0.1 1"/>
        <body><geom type="sphere" size="0.01"/></body></worldbody></mujoco>"#,
    )
    .unwrap();
    let kin = forward_kinematics(&model, &State::new(&model));
    // origin just outside the tiny sensor body so it does not self-hit
    let p = RayPattern {
        kind: PatternKind::Rotating {
            channels: 1,
            azimuths: 4,
            min_elev: 0.0,
            max_elev: 0.0,
        },
        body: 1,
        offset: Transform::from_translation(Vec3::new(0.0, 0.0, 0.02)),
        max_range: 10.0,
    };
    let d: Vec<f64> = lidar_scan(&model, &kin, &p, 0).iter().map(|s| s.distance).collect();
    let expect = [1.9, 0.9, 1.9, 0.9];
    assert_eq!(d.len(), 4);
    for k in 0..4 {
        assert!((d[k] - expect[k]).abs() < 1e-12, "{d:?}");
    }
}

#[test]
fn rosette_frames_differ_and_are_unit() {
    let p = rosette(0, Transform::IDENTITY, 10.0);
    let a = p.rays(0);
    let b = p.rays(1);
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).any(|(x, y)| (x.1 - y.1).norm() > 1e-6));
    for (_, d) in a.iter().chain(&b) {
        assert!((d.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn scan_tracks_moving_sphere() {
    let xml = r#"<mujoco><worldbody><body name="eye"><geom type="sphere" size="0.01"/></body>
        <body name="ball" pos="1 0 0"><freejoint/><geom type="sphere" size="0.2"/></body></worldbody></mujoco>"#;
    let model = load_model(xml).unwrap();
    let p = RayPattern {
        kind: PatternKind::SolidState {
            h_fov: 0.0,
            v_fov: 0.0,
            nh: 1,
            nv: 1,
        },
        body: 1,
        offset: Transform::from_translation(Vec3::new(0.05, 0.0, 0.0)),
        max_range: 10.0,
    };
    let mut state = State::new(&model);
    let d0 = lidar_scan(&model, &forward_kinematics(&model, &state), &p, 0)[0].distance;
    state.q[0] = 1.5;
    let d1 = lidar_scan(&model, &forward_kinematics(&model, &state), &p, 1)[0].distance;
    assert!((d0 - 0.75).abs() < 1e-12);
    assert!((d1 - 1.25).abs() < 1e-12);
}
