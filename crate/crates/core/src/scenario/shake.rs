use std::f64::consts::TAU;

use rand::Rng;

use super::*;
use crate::batch::env_rng;

/// Base trajectory: a sinusoid along a unit direction, shifted so it starts
/// at the origin. Returns position, velocity and acceleration at `tau`.
fn reference(dir: Vec3, phase: f64, amp: f64, omega: f64, tau: f64) -> (Vec3, Vec3, Vec3) {
    if tau <= 0.0 {
        return (Vec3::ZERO, Vec3::ZERO, Vec3::ZERO);
    }
    let a = omega * tau + phase;
    (
        dir * (amp * (a.sin() - phase.sin())),
        dir * (amp * omega * a.cos()),
        dir * (-amp * omega * omega * a.sin()),
    )
}

/// A two-finger clamp squeezes a box, then its base tracks a sinusoid
/// along a random direction (one per env, from the seed). The box is
/// retained when its position relative to the base moves less than
/// `max_slip` while shaking. Each env of the batch is one trial.
pub(super) fn run(cfg: &ScenarioConfig, p: &Params<'_>) -> Result<Outcome, ScenarioError> {
    let amp = p.f64("amplitude", 0.05)?;
    let freq = p.f64("freq", 2.0)?;
    let force = p.f64("force", 20.0)?;
    let mu = p.f64("mu", 0.8)?;
    let mass = p.f64("mass", 0.5)?;
    let grip = p.f64("grip", 0.5)?;
    let duration = p.f64("duration", 2.0)?;
    let max_slip = p.f64("max_slip", 0.01)?;
    let kp = p.f64("kp", 400.0)?;
    let kd = p.f64("kd", 40.0)?;
    p.finish()?;
    let h = cfg.h_or(0.002);
    let steps = cfg.steps_or(((grip + duration) / h).round() as u64);
    let model = cfg.model_or(|| scenes::shake(mu, mass, h), h)?;
    let base = find_body(&model, "base")?;
    let object = find_body(&model, "object")?;
    let slides = [find_joint(&model, "bx")?, find_joint(&model, "by")?, find_joint(&model, "bz")?];
    let motors = [
        find_actuator(&model, "mx")?,
        find_actuator(&model, "my")?,
        find_actuator(&model, "mz")?,
    ];
    let fingers = [find_actuator(&model, "ml")?, find_actuator(&model, "mr")?];
    let total_mass: f64 = model.bodies.iter().map(|b| b.mass).sum();
    let gravity = model.opt.gravity;
    let qa: Vec<usize> = slides.iter().map(|&j| model.joints[j].qpos_adr).collect();
    let da: Vec<usize> = slides.iter().map(|&j| model.joints[j].dof_adr).collect();
    let omega = TAU * freq;

    let b = cfg.batch;
    let motions: Vec<(Vec3, f64)> = (0..b)
        .map(|e| {
            let mut rng = env_rng(cfg.seed, e, 0);
            let z: f64 = rng.random_range(-1.0..1.0);
            let az: f64 = rng.random_range(0.0..TAU);
            let r = (1.0 - z * z).sqrt();
            (Vec3::new(r * az.cos(), r * az.sin(), z), rng.random_range(0.0..TAU))
        })
        .collect();
    let nu = model.nu();
    let mut sim = Sim::new(model, cfg, h);
    let grip_steps = (grip / h).round() as u64;
    let mut rel0: Vec<Option<Vec3>> = vec![None; b];
    let mut slip = vec![0.0f64; b];
    let mut out = Outcome::default();
    let mut ok = true;
    for _ in 0..steps {
        let tau = sim.time() - grip_steps as f64 * h;
        for e in 0..b {
            let st = &sim.bs.envs[e].state;
            let x = Vec3::new(st.q[qa[0]], st.q[qa[1]], st.q[qa[2]]);
            let v = Vec3::new(st.v[da[0]], st.v[da[1]], st.v[da[2]]);
            let (xr, vr, ar) = reference(motions[e].0, motions[e].1, amp, omega, tau);
            let f = (ar + (xr - x) * kp + (vr - v) * kd - gravity) * total_mass;
            let ctrl = &mut sim.ctrl[e * nu..(e + 1) * nu];
            for k in 0..3 {
                ctrl[motors[k]] = f.to_array()[k];
            }
            for &a in &fingers {
                ctrl[a] = force;
            }
        }
        if !ok {
            break;
        }
        ok &= sim.step();
        for e in 0..b {
            let pz = sim.poses(e, &[base, object]);
            let rel = pz[1].0 - pz[0].0;
            if sim.steps == grip_steps {
                rel0[e] = Some(rel);
            }
            let s = rel0[e].map_or(0.0, |r0| (rel - r0).norm());
            slip[e] = slip[e].max(s);
            out.records.push(MetricsRecord {
                slip: Some(s),
                retained: Some(slip[e] < max_slip),
                label: Some("base_offset".into()),
                value: Some(pz[0].0.norm()),
                steps_per_sec: cfg.timing.then(|| sim.steps_per_sec()),
                ..sim.record("shake", e)
            });
        }
    }
    let retained = slip.iter().filter(|&&s| s < max_slip).count();
    let worst = slip.iter().fold(0.0f64, |a, &s| a.max(s));
    out.note("trials", b as f64);
    out.note("retained", retained as f64);
    out.note("max_slip", worst);
    out.note("failed_envs", sim.failed_envs() as f64);
    out.throughput.push(("steps_per_sec".into(), sim.steps_per_sec()));
    out.pass = ok && sim.steps >= steps && retained == b;
    Ok(out)
}
