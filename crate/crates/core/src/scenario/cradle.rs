use super::*;

/// Pendulum spheres; the first is raised and released. The striker's
/// speed just before the first impact is compared with the last ball's
/// peak speed, and the middle balls must stay nearly still at that moment.
pub(super) fn run(cfg: &ScenarioConfig, p: &Params<'_>) -> Result<Outcome, ScenarioError> {
    let e = p.f64("e", 1.0)?;
    let angle = p.f64("angle", 30.0)?;
    let balls = p.usize("balls", 5)?;
    let gap = p.f64("gap", 1e-3)?;
    let transfer_min = p.f64("transfer", 0.9)?;
    let middle_max = p.f64("middle", 0.15)?;
    p.finish()?;
    if balls < 2 {
        return Err(config("cradle needs at least two balls"));
    }
    let h = cfg.h_or(5e-4);
    let steps = cfg.steps_or((0.6 / h).round() as u64);
    let mut model = cfg.model_or(|| scenes::cradle(balls, 0.05, 0.5, gap, h), h)?;
    model.set_restitution(e);
    let hinged: Vec<usize> = (1..model.nbody())
        .filter(|&b| {
            let j = &model.bodies[b].joints;
            j.len() == 1 && model.joints[j.start].kind == JointKind::Hinge
        })
        .collect();
    if hinged.len() < 2 {
        return Err(config("cradle needs at least two hinged bodies"));
    }
    let striker_q = model.joints[model.bodies[hinged[0]].joints.start].qpos_adr;
    let raise = angle.to_radians();
    let mut sim = Sim::with(model, cfg.batch, cfg.seed, Pool::new(cfg.workers), h, |_, _, s| {
        s.q[striker_q] = raise
    });
    let n = hinged.len();
    let speeds = |sim: &Sim| -> Vec<f64> {
        let kin = forward_kinematics(&sim.model, &sim.bs.envs[0].state);
        hinged.iter().map(|&b| kin.point_velocity(b, kin.xcom[b]).norm()).collect()
    };
    let mut out = Outcome::default();
    let mut pre = 0.0f64;
    let mut impact: Option<f64> = None;
    let mut peak = (0.0f64, vec![0.0; n]);
    let mut ok = true;
    for _ in 0..steps {
        let v = speeds(&sim);
        if impact.is_none() {
            if v[1] > 1e-9 {
                impact = Some(sim.time());
            } else {
                pre = pre.max(v[0]);
            }
        }
        if v[n - 1] > peak.0 {
            peak = (v[n - 1], v.clone());
        }
        if !ok {
            break;
        }
        ok &= sim.step();
        let st = &sim.bs.envs[0].state;
        let rec = sim.record("cradle", 0);
        out.records.push(MetricsRecord {
            kinetic_energy: Some(sim.kinetic(0)),
            momentum: Some(momentum(&sim.model, st)),
            steps_per_sec: cfg.timing.then(|| sim.steps_per_sec()),
            ..rec.clone()
        });
        for (i, &b) in hinged.iter().enumerate() {
            out.records.push(MetricsRecord {
                label: Some(format!("ball{i}")),
                value: Some(st.q[sim.model.joints[sim.model.bodies[b].joints.start].qpos_adr]),
                iterations: None,
                residual: None,
                contacts: None,
                ..rec.clone()
            });
        }
    }
    let transfer = if pre > 0.0 { peak.0 / pre } else { 0.0 };
    let middle = if pre > 0.0 {
        peak.1[1..n - 1].iter().fold(0.0f64, |a, &v| a.max(v)) / pre
    } else {
        f64::INFINITY
    };
    out.note("striker_speed", pre);
    out.note("first_impact_time", impact.unwrap_or(f64::NAN));
    out.note("last_ball_speed", peak.0);
    out.note("transfer_ratio", transfer);
    out.note("middle_ratio", middle);
    out.throughput.push(("steps_per_sec".into(), sim.steps_per_sec()));
    out.pass = ok && impact.is_some() && transfer >= transfer_min && middle <= middle_max;
    Ok(out)
}
