use super::*;

/// Tower of boxes on a plane. After `settle` steps the poses become the
/// reference; the stability error is then tracked against them.
pub(super) fn run(cfg: &ScenarioConfig, p: &Params<'_>) -> Result<Outcome, ScenarioError> {
    let boxes = p.usize("boxes", 5)?;
    let grid = p.usize("grid", 0)?;
    let settle = p.usize("settle", 500)?;
    let tol = p.f64("tol", 5e-3)?;
    let max_slope = p.f64("slope", 1e-6)?;
    let window = p.usize("window", 500)?.max(2);
    p.finish()?;
    let h = cfg.h_or(0.01);
    let steps = cfg.steps_or(2000);
    let model = cfg.model_or(|| scenes::stack(boxes, grid, h), h)?;
    let bodies = free_bodies(&model);
    if bodies.is_empty() {
        return Err(config("stack needs at least one free body"));
    }
    let mut sim = Sim::new(model, cfg, h);
    let mut ok = true;
    for _ in 0..settle {
        ok &= sim.step();
    }
    sim.steps = 0;
    sim.elapsed = Duration::ZERO;
    let b = sim.bs.len();
    let reference: Vec<_> = (0..b).map(|e| sim.poses(e, &bodies)).collect();
    let mut series = vec![Vec::new(); b];
    let mut out = Outcome::default();
    for _ in 0..steps {
        if !ok {
            break;
        }
        ok &= sim.step();
        for e in 0..b {
            let (err, dp, dth) = drift(&sim.poses(e, &bodies), &reference[e]);
            series[e].push(err);
            out.records.push(MetricsRecord {
                stability_error: Some(err),
                pos_drift: Some(dp),
                ang_drift: Some(dth),
                steps_per_sec: cfg.timing.then(|| sim.steps_per_sec()),
                ..sim.record("stack", e)
            });
        }
    }
    let max_err = series.iter().flatten().fold(0.0f64, |a, &x| a.max(x));
    let slope = series
        .iter()
        .map(|s| trend(&s[s.len().saturating_sub(window)..]))
        .fold(f64::NEG_INFINITY, f64::max);
    let failed = sim.failed_envs();
    out.note("max_stability_error", max_err);
    out.note("final_stability_error", series[0].last().copied().unwrap_or(0.0));
    out.note("tail_slope", slope);
    out.note("failed_envs", failed as f64);
    out.throughput.push(("steps_per_sec".into(), sim.steps_per_sec()));
    out.pass = failed == 0 && max_err < tol && slope < max_slope;
    Ok(out)
}
