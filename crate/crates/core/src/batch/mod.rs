//! Many independent environments over one shared model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::collision::ManifoldStore;
use crate::dynamics::{forward_kinematics, State};
use crate::exec::Pool;
use crate::linalg::{Quat, Vec3};
use crate::model::Model;
use crate::solver::{solve_step, ConstraintSet, Solution, SolverError, SolverOptions, StepDiagnostics};

/// Random stream for `(seed, env, step)`. Streams never depend on the batch
/// size, so env `i` sees the same numbers in any batch that contains it.
pub fn env_rng(seed: u64, env: usize, step: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&step.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(env as u64);
    rng
}

/// One simulated world.
#[derive(Clone, Debug)]
pub struct Env {
    pub state: State,
    pub manifolds: ManifoldStore,
    pub diagnostics: StepDiagnostics,
    /// Rows and impulses of the last step, for force sensors.
    pub constraints: ConstraintSet,
    pub solutions: Vec<Solution>,
    /// State before the last step, for finite-difference sensors.
    pub prev_state: Option<State>,
    pub last_h: f64,
    /// Set when a step failed; the env is no longer advanced.
    pub failed: Option<SolverError>,
    pub steps: u64,
}

impl Env {
    pub fn new(model: &Model) -> Self {
        Env::from_state(State::new(model))
    }

    pub fn from_state(state: State) -> Self {
        Env {
            state,
            manifolds: ManifoldStore::default(),
            diagnostics: StepDiagnostics::default(),
            constraints: ConstraintSet::default(),
            solutions: Vec::new(),
            prev_state: None,
            last_h: 0.0,
            failed: None,
            steps: 0,
        }
    }

    pub fn step(&mut self, model: &Model, ctrl: &[f64], h: f64, opts: &SolverOptions, pool: &Pool) -> Result<(), SolverError> {
        if let Some(e) = &self.failed {
            return Err(e.clone());
        }
        match solve_step(model, &self.state, &self.manifolds, ctrl, h, opts, pool) {
            Ok(out) => {
                self.prev_state = Some(std::mem::replace(&mut self.state, out.state));
                self.manifolds = out.manifolds;
                self.diagnostics = out.diagnostics;
                self.constraints = out.constraints;
                self.solutions = out.solutions;
                self.last_h = h;
                self.steps += 1;
                Ok(())
            }
            Err(e) => {
                self.failed = Some(e.clone());
                Err(e)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct BatchState {
    pub seed: u64,
    pub envs: Vec<Env>,
}

impl BatchState {
    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn failed(&self) -> Vec<usize> {
        (0..self.envs.len()).filter(|&i| self.envs[i].failed.is_some()).collect()
    }
}

/// Creates `b` envs at the model's default state, then lets `randomize`
/// perturb env `i` with its own stream from `(seed, i, 0)`.
pub fn batch_reset<F>(model: &Model, b: usize, seed: u64, randomize: F) -> BatchState
where
    F: Fn(usize, &mut ChaCha8Rng, &mut State),
{
    let envs = (0..b.max(1))
        .map(|i| {
            let mut s = State::new(model);
            randomize(i, &mut env_rng(seed, i, 0), &mut s);
            Env::from_state(s)
        })
        .collect();
    BatchState { seed, envs }
}

/// Steps every env once. `ctrls` holds `nu` values per env, back to back.
/// Envs that fail are flagged and skipped; the rest keep going.
pub fn batch_step(model: &Model, bs: &mut BatchState, ctrls: &[f64], h: f64, opts: &SolverOptions, pool: &Pool) {
    let nu = model.nu();
    assert_eq!(ctrls.len(), nu * bs.envs.len(), "ctrls must hold nu values per env");
    pool.for_each_mut(&mut bs.envs, |i, env| {
        if env.failed.is_none() {
            let _ = env.step(model, &ctrls[i * nu..(i + 1) * nu], h, opts, pool);
        }
    });
}

/// Body poses for a batch, `B × nbody × 7` laid out as
/// `(tx, ty, tz, qw, qx, qy, qz)`. Body 0 is the world.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchPoses {
    pub b: usize,
    pub nbody: usize,
    pub data: Vec<f64>,
}

impl BatchPoses {
    pub fn new(b: usize, nbody: usize) -> Self {
        BatchPoses {
            b,
            nbody,
            data: vec![0.0; b * nbody * 7],
        }
    }

    pub fn pose(&self, env: usize, body: usize) -> (Vec3, Quat) {
        let o = (env * self.nbody + body) * 7;
        let d = &self.data[o..o + 7];
        (Vec3::new(d[0], d[1], d[2]), Quat::new(d[3], d[4], d[5], d[6]))
    }

    pub fn set_pose(&mut self, env: usize, body: usize, p: Vec3, q: Quat) {
        let o = (env * self.nbody + body) * 7;
        self.data[o..o + 3].copy_from_slice(&p.to_array());
        self.data[o + 3..o + 7].copy_from_slice(&q.to_array());
    }

    /// Poses of one env.
    pub fn env(&self, env: usize) -> &[f64] {
        &self.data[env * self.nbody * 7..(env + 1) * self.nbody * 7]
    }
}

pub fn state_poses(model: &Model, state: &State) -> Vec<(Vec3, Quat)> {
    let kin = forward_kinematics(model, state);
    (0..model.nbody())
        .map(|b| (kin.xform[b].translation, kin.xform[b].rotation))
        .collect()
}

pub fn export_poses(model: &Model, bs: &BatchState, pool: &Pool) -> BatchPoses {
    let per_env = pool.map(&bs.envs, |e| state_poses(model, &e.state));
    let mut out = BatchPoses::new(bs.envs.len(), model.nbody());
    for (i, poses) in per_env.iter().enumerate() {
        for (b, &(p, q)) in poses.iter().enumerate() {
            out.set_pose(i, b, p, q);
        }
    }
    out
}
