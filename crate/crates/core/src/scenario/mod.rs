//! Scenario runner behind the `playground` CLI. Each scenario builds or
//! loads a model, steps a batch and returns metrics plus a pass flag.

mod metrics;
pub mod scenes;

mod cradle;
mod drop;
mod incline;
mod scaling;
mod shake;
mod stack;

pub use metrics::{drift, stability_error, write_metrics, MetricsFormat, MetricsRecord, COLUMNS};

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::batch::{batch_reset, batch_step, state_poses, BatchState};
use crate::dynamics::{energy, forward_kinematics, State};
use crate::exec::Pool;
use crate::linalg::{Quat, Vec3};
use crate::mjcf::{load_model, load_model_file, MjcfError};
use crate::model::{JointKind, Model};
use crate::solver::SolverOptions;

pub const SCENARIOS: [&str; 7] = ["stack", "incline", "drop10ms", "cradle", "shake", "scalingN", "batchscale"];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario {0:?}")]
    Unknown(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] MjcfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn config(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Config(msg.into())
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: String,
    /// External MJCF used instead of the built-in scene.
    pub model: Option<PathBuf>,
    /// Timestep; each scenario has its own default.
    pub h: Option<f64>,
    pub steps: Option<u64>,
    pub batch: usize,
    pub seed: u64,
    /// Worker threads; 0 means one per core.
    pub workers: usize,
    pub params: BTreeMap<String, String>,
    /// Add wall-clock `steps_per_sec` to records.
    pub timing: bool,
}

impl ScenarioConfig {
    pub fn new(scenario: &str) -> Self {
        ScenarioConfig {
            scenario: scenario.to_string(),
            model: None,
            h: None,
            steps: None,
            batch: 1,
            seed: 0,
            workers: 1,
            params: BTreeMap::new(),
            timing: false,
        }
    }

    pub fn param(mut self, k: &str, v: impl ToString) -> Self {
        self.params.insert(k.to_string(), v.to_string());
        self
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if !SCENARIOS.contains(&self.scenario.as_str()) {
            return Err(ScenarioError::Unknown(self.scenario.clone()));
        }
        if self.steps == Some(0) {
            return Err(config("steps must be at least 1"));
        }
        if self.batch == 0 {
            return Err(config("batch must be at least 1"));
        }
        if let Some(h) = self.h {
            if !(h > 0.0 && h.is_finite()) {
                return Err(config(format!("timestep must be positive, got {h}")));
            }
        }
        Ok(())
    }

    fn h_or(&self, default: f64) -> f64 {
        self.h.unwrap_or(default)
    }

    fn steps_or(&self, default: u64) -> u64 {
        self.steps.unwrap_or(default)
    }

    /// The external model if one was given, else the built-in scene.
    fn model_or(&self, builtin: impl FnOnce() -> String, h: f64) -> Result<Model, ScenarioError> {
        let mut m = match &self.model {
            Some(p) => load_model_file(p)?,
            None => load_model(&builtin())?,
        };
        m.opt.timestep = h;
        Ok(m)
    }
}

/// Typed access to `--param k=v` pairs; keys that no scenario reads are
/// rejected.
struct Params<'a> {
    map: &'a BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Params<'a> {
    fn new(map: &'a BTreeMap<String, String>) -> Self {
        Params {
            map,
            used: RefCell::default(),
        }
    }

    fn raw(&self, k: &str) -> Option<&'a str> {
        self.used.borrow_mut().insert(k.to_string());
        self.map.get(k).map(String::as_str)
    }

    fn f64(&self, k: &str, default: f64) -> Result<f64, ScenarioError> {
        match self.raw(k) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| config(format!("parameter {k}={v:?} is not a number"))),
        }
    }

    fn usize(&self, k: &str, default: usize) -> Result<usize, ScenarioError> {
        match self.raw(k) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| config(format!("parameter {k}={v:?} is not a count"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, k: &str, default: Vec<T>) -> Result<Vec<T>, ScenarioError> {
        match self.raw(k) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| config(format!("parameter {k}={v:?} is not a list"))))
                .collect(),
        }
    }

    /// Call after reading every parameter, before the run starts.
    fn finish(&self) -> Result<(), ScenarioError> {
        let used = self.used.borrow();
        match self.map.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(config(format!("unknown parameter {k:?}"))),
            None => Ok(()),
        }
    }
}

/// Everything a scenario run produced.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub records: Vec<MetricsRecord>,
    pub pass: bool,
    /// Scalar results, in a fixed order.
    pub summary: Vec<(String, f64)>,
    /// Wall-clock throughput figures (steps/sec); never written to files.
    pub throughput: Vec<(String, f64)>,
}

impl Outcome {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }

    fn note(&mut self, key: impl Into<String>, v: f64) {
        self.summary.push((key.into(), v));
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// A stepped batch plus timing.
struct Sim {
    model: Model,
    bs: BatchState,
    pool: Pool,
    opts: SolverOptions,
    h: f64,
    ctrl: Vec<f64>,
    steps: u64,
    elapsed: Duration,
}

impl Sim {
    fn new(model: Model, cfg: &ScenarioConfig, h: f64) -> Self {
        Sim::with(model, cfg.batch, cfg.seed, Pool::new(cfg.workers), h, |_, _, _| {})
    }

    fn with<F>(model: Model, b: usize, seed: u64, pool: Pool, h: f64, randomize: F) -> Self
    where
        F: Fn(usize, &mut rand_chacha::ChaCha8Rng, &mut State),
    {
        let bs = batch_reset(&model, b, seed, randomize);
        let opts = SolverOptions::from_model(&model);
        let ctrl = vec![0.0; model.nu() * b];
        Sim {
            model,
            bs,
            pool,
            opts,
            h,
            ctrl,
            steps: 0,
            elapsed: Duration::ZERO,
        }
    }

    /// Steps all envs with the current controls. False once any env failed.
    fn step(&mut self) -> bool {
        let t = Instant::now();
        batch_step(&self.model, &mut self.bs, &self.ctrl, self.h, &self.opts, &self.pool);
        self.elapsed += t.elapsed();
        self.steps += 1;
        self.bs.envs.iter().all(|e| e.failed.is_none())
    }

    fn time(&self) -> f64 {
        self.steps as f64 * self.h
    }

    fn steps_per_sec(&self) -> f64 {
        let s = self.elapsed.as_secs_f64();
        if s > 0.0 {
            self.steps as f64 / s
        } else {
            f64::INFINITY
        }
    }

    fn poses(&self, env: usize, bodies: &[usize]) -> Vec<(Vec3, Quat)> {
        let all = state_poses(&self.model, &self.bs.envs[env].state);
        bodies.iter().map(|&b| all[b]).collect()
    }

    /// Record skeleton with solver statistics for one env.
    fn record(&self, scenario: &str, env: usize) -> MetricsRecord {
        let e = &self.bs.envs[env];
        MetricsRecord {
            scenario: scenario.to_string(),
            env,
            step: self.steps,
            time: self.time(),
            iterations: Some(e.diagnostics.max_iterations() as u64),
            residual: Some(e.diagnostics.max_residual()),
            contacts: Some(e.diagnostics.contacts as u64),
            ..Default::default()
        }
    }

    fn kinetic(&self, env: usize) -> f64 {
        let s = &self.bs.envs[env].state;
        energy(&self.model, s, &forward_kinematics(&self.model, s)).0
    }

    fn failed_envs(&self) -> usize {
        self.bs.envs.iter().filter(|e| e.failed.is_some()).count()
    }
}

/// Least-squares slope of `ys` against their index.
fn trend(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    sxy / sxx
}

/// Linear momentum `Σ m v_com`.
fn momentum(model: &Model, state: &State) -> Vec3 {
    let kin = forward_kinematics(model, state);
    (1..model.nbody()).fold(Vec3::ZERO, |p, b| p + kin.point_velocity(b, kin.xcom[b]) * model.bodies[b].mass)
}

/// Bodies whose first joint is free, in model order.
fn free_bodies(model: &Model) -> Vec<usize> {
    (1..model.nbody())
        .filter(|&b| {
            let j = &model.bodies[b].joints;
            !j.is_empty() && model.joints[j.start].kind == JointKind::Free
        })
        .collect()
}

fn find_body(model: &Model, name: &str) -> Result<usize, ScenarioError> {
    model
        .body_id(name)
        .ok_or_else(|| config(format!("model has no body named {name:?}")))
}

fn find_joint(model: &Model, name: &str) -> Result<usize, ScenarioError> {
    model
        .joint_id(name)
        .ok_or_else(|| config(format!("model has no joint named {name:?}")))
}

fn find_actuator(model: &Model, name: &str) -> Result<usize, ScenarioError> {
    model
        .actuator_id(name)
        .ok_or_else(|| config(format!("model has no actuator named {name:?}")))
}

/// Runs one scenario to completion.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Outcome, ScenarioError> {
    cfg.validate()?;
    let p = Params::new(&cfg.params);
    let out = match cfg.scenario.as_str() {
        "stack" => stack::run(cfg, &p)?,
        "incline" => incline::run(cfg, &p)?,
        "drop10ms" => drop::run(cfg, &p)?,
        "cradle" => cradle::run(cfg, &p)?,
        "shake" => shake::run(cfg, &p)?,
        "scalingN" => scaling::run_scaling(cfg, &p)?,
        "batchscale" => scaling::run_batch(cfg, &p)?,
        s => return Err(ScenarioError::Unknown(s.to_string())),
    };
    Ok(out)
}

#[cfg(test)]
mod tests;
