//! Velocity-level impulse solver.
//!
//! Each step builds equality and inequality rows, splits them into islands,
//! eliminates the equality impulses per island and runs projected
//! Gauss-Seidel on what remains. Islands share no dofs, so they are solved
//! independently and their results merged.

mod assemble;
mod compliance;
mod island;
mod pgs;
mod reduce;

pub use assemble::{
    assemble_constraints, effective_inverse_mass, ConstraintRow, ConstraintSet, ContactRef, RowKind, LIMIT_MARGIN, RESTITUTION_THRESHOLD,
};
pub use compliance::{compliance_params, impedance, MAX_IMPEDANCE, MIN_IMPEDANCE};
pub use island::{build_islands, Island, IslandPartition};
pub use pgs::{constraint_velocity, mcp_residual, pgs_solve, warm_start, BoxRow, PgsResult, DEGENERATE_DIAGONAL};
pub use reduce::{advance_velocity, recover_equality, schur_reduce, ReducedSystem};

use crate::collision::{broadphase, narrowphase, update_manifolds, ManifoldStore};
use crate::dynamics::{forward_kinematics, integrate, DynamicsError, DynamicsTerms, Kinematics, State};
use crate::exec::Pool;
use crate::linalg::LinalgError;
use crate::model::Model;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("solref time constant and damping ratio must be positive, got {0:?}")]
    BadSolref([f64; 2]),
    #[error("equality block could not be factored: {0}")]
    SolverDegenerate(LinalgError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub warm_start: bool,
}

impl SolverOptions {
    pub fn from_model(model: &Model) -> Self {
        SolverOptions {
            max_iters: model.opt.iterations.max(1),
            tol: model.opt.tolerance,
            warm_start: true,
        }
    }
}

/// Result of one island solve. Row indices refer to the step's `ConstraintSet`.
#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    pub eq_rows: Vec<usize>,
    pub ineq_rows: Vec<usize>,
    pub lambda_e: Vec<f64>,
    pub lambda_n: Vec<f64>,
    pub dofs: Vec<usize>,
    pub v_plus: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub degenerate: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IslandDiagnostics {
    pub bodies: usize,
    pub eq_rows: usize,
    pub ineq_rows: usize,
    pub iterations: usize,
    pub residual: f64,
    pub degenerate: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    pub contacts: usize,
    /// Contact points that inherited a cached impulse.
    pub warm_hits: usize,
    pub unsupported_pairs: usize,
    pub islands: Vec<IslandDiagnostics>,
}

impl StepDiagnostics {
    pub fn warm_hit_rate(&self) -> f64 {
        if self.contacts == 0 {
            0.0
        } else {
            self.warm_hits as f64 / self.contacts as f64
        }
    }

    pub fn max_iterations(&self) -> usize {
        self.islands.iter().map(|i| i.iterations).max().unwrap_or(0)
    }

    pub fn max_residual(&self) -> f64 {
        self.islands.iter().map(|i| i.residual).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: State,
    pub manifolds: ManifoldStore,
    /// Kinematics at the start of the step.
    pub kin: Kinematics,
    pub constraints: ConstraintSet,
    pub solutions: Vec<Solution>,
    pub diagnostics: StepDiagnostics,
}

/// Detects contacts for the current pose and refreshes the manifolds.
/// Returns the new store and the number of skipped unsupported pairs.
pub fn detect_contacts(model: &Model, kin: &Kinematics, prev: &ManifoldStore, pool: &Pool) -> (ManifoldStore, usize) {
    let pairs = broadphase(model, kin);
    let results = pool.map(&pairs, |&(a, b)| narrowphase(model, kin, a, b));
    let mut fresh = Vec::with_capacity(pairs.len());
    let mut unsupported = 0;
    for (&pair, r) in pairs.iter().zip(results) {
        match r {
            Ok(points) if !points.is_empty() => fresh.push((pair, points)),
            Ok(_) => {}
            Err(_) => unsupported += 1,
        }
    }
    (update_manifolds(prev, fresh), unsupported)
}

/// Solves one island (or any subset of rows closed under dof sharing).
pub fn solve_rows(
    model: &Model,
    cs: &ConstraintSet,
    terms: &DynamicsTerms,
    manifolds: &ManifoldStore,
    eq_rows: &[usize],
    ineq_rows: &[usize],
    opts: &SolverOptions,
) -> Result<Solution, SolverError> {
    let rs = schur_reduce(model, cs, terms, eq_rows, ineq_rows)?;
    let rows = BoxRow::from_rows(cs, ineq_rows);
    let init = if opts.warm_start {
        warm_start(manifolds, cs, ineq_rows)
    } else {
        vec![0.0; ineq_rows.len()]
    };
    let mut pgs = pgs_solve(&rs.a, &rs.b, &rows, &init, opts.max_iters, opts.tol);
    // A stale cache can start PGS somewhere slower than zero. When the warm
    // run misses the tolerance, retry cold so warm starting never does worse.
    if pgs.residual > opts.tol && init.iter().any(|&l| l != 0.0) {
        let cold = pgs_solve(&rs.a, &rs.b, &rows, &vec![0.0; init.len()], opts.max_iters, opts.tol);
        let spent = pgs.iterations + cold.iterations;
        if cold.residual < pgs.residual {
            pgs = cold;
        }
        pgs.iterations = spent;
    }
    let lambda_e = recover_equality(&rs, &pgs.lambda);
    let v_plus = advance_velocity(&rs, &lambda_e, &pgs.lambda);
    Ok(Solution {
        eq_rows: eq_rows.to_vec(),
        ineq_rows: ineq_rows.to_vec(),
        lambda_e,
        lambda_n: pgs.lambda,
        dofs: rs.dofs,
        v_plus,
        iterations: pgs.iterations,
        residual: pgs.residual,
        degenerate: pgs.degenerate,
    })
}

/// One full step: kinematics, contacts, assembly, island solves, integration.
pub fn solve_step(
    model: &Model,
    state: &State,
    manifolds: &ManifoldStore,
    ctrl: &[f64],
    h: f64,
    opts: &SolverOptions,
    pool: &Pool,
) -> Result<StepOutput, SolverError> {
    state.check(model)?;
    let kin = forward_kinematics(model, state);
    let (mut store, unsupported) = detect_contacts(model, &kin, manifolds, pool);
    let terms = DynamicsTerms::compute(model, state, &kin, ctrl, h, pool)?;
    let cs = assemble_constraints(model, state, &kin, &terms, &store, h)?;
    let part = build_islands(&cs, model);
    let solved = pool.map(&part.islands, |isl| {
        solve_rows(model, &cs, &terms, &store, &isl.eq_rows, &isl.ineq_rows, opts)
    });
    let mut v_plus = terms.v_free.clone();
    let mut solutions = Vec::with_capacity(solved.len());
    let mut diagnostics = StepDiagnostics {
        contacts: store.point_count(),
        warm_hits: store.iter().map(|m| m.matched.iter().filter(|x| x.is_some()).count()).sum(),
        unsupported_pairs: unsupported,
        islands: Vec::with_capacity(solved.len()),
    };
    for (isl, sol) in part.islands.iter().zip(solved) {
        let sol = sol?;
        for (&d, &v) in sol.dofs.iter().zip(&sol.v_plus) {
            v_plus[d] = v;
        }
        for (&row, &l) in sol.ineq_rows.iter().zip(&sol.lambda_n) {
            if let Some(o) = cs.ineq[row].owner {
                if let Some(m) = store.manifolds.get_mut(&o.pair) {
                    m.lambda[o.point][o.dir] = l;
                }
            }
        }
        diagnostics.islands.push(IslandDiagnostics {
            bodies: isl.bodies.len(),
            eq_rows: sol.eq_rows.len(),
            ineq_rows: sol.ineq_rows.len(),
            iterations: sol.iterations,
            residual: sol.residual,
            degenerate: sol.degenerate,
        });
        solutions.push(sol);
    }
    let next = integrate(model, state, &v_plus, h)?;
    Ok(StepOutput {
        state: next,
        manifolds: store,
        kin,
        constraints: cs,
        solutions,
        diagnostics,
    })
}
