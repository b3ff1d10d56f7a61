use super::*;

fn bits(s: &State) -> Vec<u64> {
    s.q.iter().chain(&s.v).map(|x| x.to_bits()).collect()
}

/// `N` disjoint chains in one env, stepped with one worker and with
/// `--workers`. Reports steps/sec for both; passes when the runs agree
/// bit for bit and, with more than one worker, the speedup for every
/// `N ≥ min_n` reaches `min_speedup`.
pub(super) fn run_scaling(cfg: &ScenarioConfig, p: &Params<'_>) -> Result<Outcome, ScenarioError> {
    let ns = p.list("n", vec![1usize, 2, 4, 8, 16])?;
    let min_speedup = p.f64("min_speedup", 1.5)?;
    let min_n = p.usize("min_n", 8)?;
    let height = p.f64("height", 0.1)?;
    p.finish()?;
    let h = cfg.h_or(0.01);
    let steps = cfg.steps_or(200);
    let workers = Pool::new(cfg.workers).workers();
    let ns = if cfg.model.is_some() { vec![0] } else { ns };
    let mut out = Outcome {
        pass: true,
        ..Default::default()
    };
    let mut last_sps = f64::INFINITY;
    let mut monotone = true;
    for n in ns {
        let model = cfg.model_or(|| scenes::chains(n, height, h), h)?;
        let n = if cfg.model.is_some() { free_bodies(&model).len() } else { n };
        let mut runs = Vec::new();
        for w in [1, workers] {
            let mut sim = Sim::with(model.clone(), 1, cfg.seed, Pool::new(w), h, |_, _, _| {});
            let mut ok = true;
            for _ in 0..steps {
                ok &= sim.step();
            }
            out.records.push(MetricsRecord {
                label: Some(format!("n={n} workers={w}")),
                value: Some(n as f64),
                kinetic_energy: Some(sim.kinetic(0)),
                steps_per_sec: cfg.timing.then(|| sim.steps_per_sec()),
                ..sim.record("scalingN", 0)
            });
            out.throughput.push((format!("n={n} workers={w}"), sim.steps_per_sec()));
            out.pass &= ok;
            runs.push((bits(&sim.bs.envs[0].state), sim.steps_per_sec()));
            if workers == 1 {
                break;
            }
        }
        let same = runs.iter().all(|r| r.0 == runs[0].0);
        let speedup = runs.last().unwrap().1 / runs[0].1;
        monotone &= runs[0].1 <= last_sps;
        last_sps = runs[0].1;
        out.note(format!("n={n}.identical"), same as u8 as f64);
        out.throughput.push((format!("n={n} speedup"), speedup));
        out.pass &= same && (workers < 2 || n < min_n || speedup >= min_speedup);
    }
    out.throughput.push(("monotone".into(), monotone as u8 as f64));
    Ok(out)
}

/// One scene stepped for a growing number of identical envs. Passes when
/// every env ends bitwise equal to env 0.
pub(super) fn run_batch(cfg: &ScenarioConfig, p: &Params<'_>) -> Result<Outcome, ScenarioError> {
    let bs = p.list("b", vec![1usize, 8, 64])?;
    let height = p.f64("height", 0.5)?;
    p.finish()?;
    if bs.contains(&0) {
        return Err(config("batch sizes must be at least 1"));
    }
    let h = cfg.h_or(0.01);
    let steps = cfg.steps_or(200);
    let model = cfg.model_or(|| scenes::chain(height, h), h)?;
    let mut out = Outcome {
        pass: true,
        ..Default::default()
    };
    for b in bs {
        let mut sim = Sim::with(model.clone(), b, cfg.seed, Pool::new(cfg.workers), h, |_, _, _| {});
        let mut ok = true;
        for _ in 0..steps {
            ok &= sim.step();
        }
        let q0 = &sim.bs.envs[0].state;
        let ref_bits = bits(q0);
        let mut identical = true;
        for e in 0..b {
            let s = &sim.bs.envs[e].state;
            identical &= bits(s) == ref_bits;
            let dev =
                s.q.iter()
                    .chain(&s.v)
                    .zip(q0.q.iter().chain(&q0.v))
                    .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            out.records.push(MetricsRecord {
                label: Some(format!("b={b}")),
                value: Some(dev),
                kinetic_energy: Some(sim.kinetic(e)),
                steps_per_sec: cfg.timing.then(|| sim.steps_per_sec() * b as f64),
                ..sim.record("batchscale", e)
            });
        }
        out.note(format!("b={b}.identical"), identical as u8 as f64);
        out.throughput
            .push((format!("b={b} env_steps_per_sec"), sim.steps_per_sec() * b as f64));
        out.pass &= ok && identical;
    }
    Ok(out)
}
