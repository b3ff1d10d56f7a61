use super::*;

/// Articulated chain dropped onto a plane at a coarse timestep. Settled
/// means the kinetic energy stays below `settle_ke` from then on; the base
/// must then stay within `max_disp` of where it settled.
pub(super) fn run(cfg: &ScenarioConfig, p: &Params<'_>) -> Result<Outcome, ScenarioError> {
    let height = p.f64("height", 0.5)?;
    let settle_ke = p.f64("settle_ke", 1e-4)?;
    let settle_within = p.f64("settle_within", 3.0)?;
    let hold = p.f64("hold", 2.0)?;
    let max_disp = p.f64("max_disp", 0.05)?;
    p.finish()?;
    let h = cfg.h_or(0.01);
    let steps = cfg.steps_or(((settle_within + hold) / h).ceil() as u64 + 1);
    let model = cfg.model_or(|| scenes::chain(height, h), h)?;
    let base = model.body_id("base").or_else(|| free_bodies(&model).first().copied());
    let base = base.ok_or_else(|| config("drop10ms needs a body named \"base\" or a free body"))?;
    let mut sim = Sim::new(model, cfg, h);
    let b = sim.bs.len();
    let start: Vec<Vec3> = (0..b).map(|e| sim.poses(e, &[base])[0].0).collect();
    let mut ke = vec![Vec::new(); b];
    let mut pos = vec![Vec::new(); b];
    let mut out = Outcome::default();
    for _ in 0..steps {
        if !sim.step() {
            break;
        }
        for e in 0..b {
            let k = sim.kinetic(e);
            let p = sim.poses(e, &[base])[0].0;
            ke[e].push(k);
            pos[e].push(p);
            out.records.push(MetricsRecord {
                kinetic_energy: Some(k),
                label: Some("base_displacement".into()),
                value: Some((p - start[e]).norm()),
                steps_per_sec: cfg.timing.then(|| sim.steps_per_sec()),
                ..sim.record("drop10ms", e)
            });
        }
    }
    let failed = sim.failed_envs();
    let mut worst_settle = 0.0f64;
    let mut worst_disp = 0.0f64;
    let mut worst_hold = f64::INFINITY;
    for e in 0..b {
        // first step from which the energy stays low
        let idx = ke[e].iter().rposition(|&k| !(k < settle_ke)).map_or(0, |i| i + 1);
        let settled = if idx < ke[e].len() { (idx + 1) as f64 * h } else { f64::INFINITY };
        worst_settle = worst_settle.max(settled);
        if let Some(&p0) = pos[e].get(idx) {
            let d = pos[e][idx..].iter().fold(0.0f64, |a, p| a.max((*p - p0).norm()));
            worst_disp = worst_disp.max(d);
            worst_hold = worst_hold.min((pos[e].len() - 1 - idx) as f64 * h);
        } else {
            worst_disp = f64::INFINITY;
            worst_hold = 0.0;
        }
    }
    out.note("settle_time", worst_settle);
    out.note("displacement_after_settle", worst_disp);
    out.note("observed_after_settle", worst_hold);
    out.note("failed_envs", failed as f64);
    out.throughput.push(("steps_per_sec".into(), sim.steps_per_sec()));
    out.pass = failed == 0 && worst_settle <= settle_within && worst_disp < max_disp && worst_hold >= hold - 0.5 * h;
    Ok(out)
}
