//! Projected Gauss-Seidel for the box-bounded inequality system.

use super::{ConstraintRow, ConstraintSet};
use crate::collision::ManifoldStore;
use crate::linalg::DenseMat;

/// Rows with `(A + C)_ii` below this are frozen.
pub const DEGENERATE_DIAGONAL: f64 = 1e-12;

/// Per-row data PGS needs besides `A` and `b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxRow {
    pub c: f64,
    pub zeta: f64,
    pub lo: f64,
    pub hi: f64,
    pub mu: f64,
    /// Local index of the normal row whose impulse bounds this one.
    pub normal: Option<usize>,
}

impl BoxRow {
    /// Builds the local view of `rows`; `normal` indices are remapped through `local`.
    pub fn from_rows(cs: &ConstraintSet, rows: &[usize]) -> Vec<BoxRow> {
        let mut local = std::collections::HashMap::new();
        for (k, &i) in rows.iter().enumerate() {
            local.insert(i, k);
        }
        rows.iter()
            .map(|&i| {
                let r: &ConstraintRow = &cs.ineq[i];
                BoxRow {
                    c: r.c,
                    zeta: r.zeta,
                    lo: r.lo,
                    hi: r.hi,
                    mu: r.mu,
                    normal: r.normal.map(|n| local[&n]),
                }
            })
            .collect()
    }

    pub fn bounds(&self, lambda: &[f64]) -> (f64, f64) {
        match self.normal {
            Some(n) => {
                let f = self.mu * lambda[n].max(0.0);
                (-f, f)
            }
            None => (self.lo, self.hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PgsResult {
    pub lambda: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub degenerate: usize,
}

/// `w = (A + C)λ + b − ζ`.
pub fn constraint_velocity(a: &DenseMat, b: &[f64], rows: &[BoxRow], lambda: &[f64]) -> Vec<f64> {
    let mut w = a.mul_vec(lambda);
    for i in 0..w.len() {
        w[i] += rows[i].c * lambda[i] + b[i] - rows[i].zeta;
    }
    w
}

/// Natural-map residual `max_i |λ_i − clamp(λ_i − w_i, l_i, u_i)|`.
pub fn mcp_residual(bounds: &[(f64, f64)], lambda: &[f64], w: &[f64]) -> f64 {
    lambda
        .iter()
        .zip(w)
        .zip(bounds)
        .map(|((&l, &w), &(lo, hi))| (l - (l - w).clamp(lo, hi)).abs())
        .fold(0.0, f64::max)
}

fn residual_of(a: &DenseMat, b: &[f64], rows: &[BoxRow], lambda: &[f64], skip: &[bool]) -> f64 {
    let w = constraint_velocity(a, b, rows, lambda);
    let bounds: Vec<(f64, f64)> = rows.iter().map(|r| r.bounds(lambda)).collect();
    let mut worst = 0.0f64;
    for i in 0..rows.len() {
        if !skip[i] {
            worst = worst.max(mcp_residual(&bounds[i..=i], &lambda[i..=i], &w[i..=i]));
        }
    }
    worst
}

/// Projected Gauss-Seidel with sweeps alternating forward and backward,
/// refreshing friction bounds from the latest normal impulse. The
/// symmetric ordering settles the slow load-sharing modes of stacked
/// contacts much sooner from a warm start. Stops once the residual drops
/// below `tol` or after `max_iters` sweeps; a warm start that already
/// satisfies `tol` uses zero sweeps.
pub fn pgs_solve(a: &DenseMat, b: &[f64], rows: &[BoxRow], init: &[f64], max_iters: usize, tol: f64) -> PgsResult {
    let n = rows.len();
    let mut lambda = init.to_vec();
    for i in 0..n {
        let (lo, hi) = rows[i].bounds(&lambda);
        lambda[i] = lambda[i].clamp(lo, hi);
    }
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)] + rows[i].c).collect();
    let skip: Vec<bool> = diag.iter().map(|&d| !(d >= DEGENERATE_DIAGONAL)).collect();
    let degenerate = skip.iter().filter(|&&s| s).count();
    let mut iterations = 0;
    let mut residual = residual_of(a, b, rows, &lambda, &skip);
    while residual >= tol && iterations < max_iters {
        let backward = iterations % 2 == 1;
        for k in 0..n {
            let i = if backward { n - 1 - k } else { k };
            if skip[i] {
                continue;
            }
            let r = &rows[i];
            let w = a.row(i).iter().zip(&lambda).map(|(x, l)| x * l).sum::<f64>() + r.c * lambda[i] + b[i] - r.zeta;
            let (lo, hi) = r.bounds(&lambda);
            lambda[i] = (lambda[i] - w / diag[i]).clamp(lo, hi);
        }
        iterations += 1;
        residual = residual_of(a, b, rows, &lambda, &skip);
    }
    PgsResult {
        lambda,
        iterations,
        residual,
        degenerate,
    }
}

/// Initial inequality impulses: cached contact impulses, zero elsewhere.
pub fn warm_start(manifolds: &ManifoldStore, cs: &ConstraintSet, rows: &[usize]) -> Vec<f64> {
    rows.iter()
        .map(|&i| {
            cs.ineq[i]
                .owner
                .and_then(|o| manifolds.manifolds.get(&o.pair).map(|m| m.lambda[o.point][o.dir]))
                .unwrap_or(0.0)
        })
        .collect()
}
