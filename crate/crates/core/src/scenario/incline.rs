use super::*;
use crate::model::GeomKind;

struct Slope {
    /// Unit downhill direction in the plane.
    dir: Vec3,
    theta: f64,
    mu: f64,
}

/// Downhill direction, tilt and combined friction of the first plane and
/// the sliding body's first geom.
fn slope_of(model: &Model, body: usize) -> Result<Slope, ScenarioError> {
    let kin = forward_kinematics(model, &State::new(model));
    let plane = (0..model.geoms.len())
        .find(|&g| model.geoms[g].kind == GeomKind::Plane)
        .ok_or_else(|| config("incline needs a plane geom"))?;
    let geom = *model.bodies[body].geoms.first().ok_or_else(|| config("sliding body has no geom"))?;
    let n = kin.geom_xform[plane].rotation.rotate(Vec3::Z);
    let g = model.opt.gravity;
    let gt = g - n * g.dot(n);
    let dir = if gt.norm() > 1e-12 { gt / gt.norm() } else { Vec3::X };
    let theta = gt.norm().atan2(-g.dot(n));
    let mu = model.geoms[plane].friction[0].max(model.geoms[geom].friction[0]);
    Ok(Slope { dir, theta, mu })
}

/// Box on a tilted plane for each friction coefficient. Predicts sticking
/// when `μ ≥ tan θ`, otherwise an acceleration of `g (sin θ − μ cos θ)`.
pub(super) fn run(cfg: &ScenarioConfig, p: &Params<'_>) -> Result<Outcome, ScenarioError> {
    let theta_deg = p.f64("theta", 20.0)?;
    let t = theta_deg.to_radians().tan();
    let mus = p.list("mu", vec![t - 0.1, t + 0.1])?;
    let stick_tol = p.f64("stick_tol", 1e-3)?;
    let accel_tol = p.f64("accel_tol", 0.05)?;
    p.finish()?;
    let h = cfg.h_or(0.002);
    let steps = cfg.steps_or(500);
    let runs: Vec<Option<f64>> = if cfg.model.is_some() {
        vec![None]
    } else {
        mus.iter().map(|&m| Some(m)).collect()
    };
    let mut out = Outcome {
        pass: true,
        ..Default::default()
    };
    for (k, mu) in runs.into_iter().enumerate() {
        let model = cfg.model_or(|| scenes::incline(theta_deg, mu.unwrap_or(0.0), h), h)?;
        let body = model.body_id("box").or_else(|| free_bodies(&model).first().copied());
        let body = body.ok_or_else(|| config("incline needs a body named \"box\" or a free body"))?;
        let s = slope_of(&model, body)?;
        let g = model.opt.gravity.norm();
        let predicted = g * (s.theta.sin() - s.mu * s.theta.cos());
        let mut sim = Sim::new(model, cfg, h);
        let start = sim.poses(0, &[body])[0].0;
        let mut speeds = Vec::new();
        let mut disp = 0.0;
        let label = format!("mu={:.4}", s.mu);
        for _ in 0..steps {
            if !sim.step() {
                break;
            }
            let st = &sim.bs.envs[0].state;
            let kin = forward_kinematics(&sim.model, st);
            disp = (kin.xform[body].translation - start).dot(s.dir);
            speeds.push(kin.point_velocity(body, kin.xcom[body]).dot(s.dir));
            out.records.push(MetricsRecord {
                env: k,
                kinetic_energy: Some(sim.kinetic(0)),
                slip: Some(disp),
                label: Some(label.clone()),
                value: Some(*speeds.last().unwrap()),
                steps_per_sec: cfg.timing.then(|| sim.steps_per_sec()),
                ..sim.record("incline", 0)
            });
        }
        // acceleration from the velocity trend over the second half
        let accel = trend(&speeds[speeds.len() / 2..]) / h;
        let sticks = predicted <= 0.0;
        let ok = sim.failed_envs() == 0
            && speeds.len() as u64 == steps
            && if sticks {
                disp.abs() < stick_tol
            } else {
                (accel - predicted).abs() <= accel_tol * predicted.abs()
            };
        out.pass &= ok;
        out.note(format!("{label}.predicted_accel"), predicted.max(0.0));
        out.note(format!("{label}.measured_accel"), accel);
        out.note(format!("{label}.displacement"), disp);
        out.note(format!("{label}.pass"), ok as u8 as f64);
        out.throughput.push((format!("{label}.steps_per_sec"), sim.steps_per_sec()));
    }
    Ok(out)
}
