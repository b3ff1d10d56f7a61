//! Elimination of equality impulses by Schur complement.

use super::{ConstraintRow, ConstraintSet, SolverError};
use crate::dynamics::DynamicsTerms;
use crate::linalg::{Cholesky, DenseMat};
use crate::model::Model;

/// Inequality system `A λ_n + b` left after eliminating `λ_e`, with the
/// pieces needed to recover `λ_e` and `v⁺`. All matrices are over the
/// local dof list `dofs`.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub dofs: Vec<usize>,
    pub je: DenseMat,
    pub jn: DenseMat,
    /// Rows are `M⁻¹ J_iᵀ`.
    pub ye: DenseMat,
    pub yn: DenseMat,
    pub v_free: Vec<f64>,
    pub ce: Vec<f64>,
    pub zeta_e: Vec<f64>,
    /// Factor of `W_ee + C_e`, absent without equality rows.
    pub eq_factor: Option<Cholesky>,
    /// `J_n M⁻¹ J_eᵀ`.
    pub g: DenseMat,
    pub a: DenseMat,
    pub b: Vec<f64>,
}

fn dof_list(model: &Model, rows: &[&ConstraintRow]) -> Vec<usize> {
    let mut trees: Vec<usize> = rows
        .iter()
        .flat_map(|r| r.j.iter().filter_map(|&(d, _)| model.bodies[model.dof_body[d]].tree))
        .collect();
    trees.sort_unstable();
    trees.dedup();
    trees.into_iter().flat_map(|t| model.trees[t].dofs.clone()).collect()
}

/// Applies `M⁻¹` tree by tree to each row of `j` (local dof columns).
fn minv_rows(model: &Model, terms: &DynamicsTerms, dofs: &[usize], j: &DenseMat) -> DenseMat {
    let mut y = j.clone();
    for i in 0..y.nrows() {
        let row = y.row_mut(i);
        let mut k = 0;
        while k < dofs.len() {
            let tree = model.bodies[model.dof_body[dofs[k]]].tree.expect("movable dof");
            let n = terms.trees[tree].dofs.len();
            terms.solve_tree(tree, &mut row[k..k + n]);
            k += n;
        }
    }
    y
}

/// Reduces the rows `eq_rows`/`ineq_rows` of `cs` over the trees they touch.
pub fn schur_reduce(
    model: &Model,
    cs: &ConstraintSet,
    terms: &DynamicsTerms,
    eq_rows: &[usize],
    ineq_rows: &[usize],
) -> Result<ReducedSystem, SolverError> {
    let eq: Vec<&ConstraintRow> = eq_rows.iter().map(|&i| &cs.eq[i]).collect();
    let ineq: Vec<&ConstraintRow> = ineq_rows.iter().map(|&i| &cs.ineq[i]).collect();
    let all: Vec<&ConstraintRow> = eq.iter().chain(&ineq).copied().collect();
    let dofs = dof_list(model, &all);
    let mut local = vec![usize::MAX; cs.nv];
    for (k, &d) in dofs.iter().enumerate() {
        local[d] = k;
    }
    let nd = dofs.len();
    let build = |rows: &[&ConstraintRow]| {
        let mut m = DenseMat::zeros(rows.len(), nd);
        for (i, r) in rows.iter().enumerate() {
            for &(d, v) in &r.j {
                m.row_mut(i)[local[d]] = v;
            }
        }
        m
    };
    let je = build(&eq);
    let jn = build(&ineq);
    let ye = minv_rows(model, terms, &dofs, &je);
    let yn = minv_rows(model, terms, &dofs, &jn);
    let v_free: Vec<f64> = dofs.iter().map(|&d| terms.v_free[d]).collect();
    let ce: Vec<f64> = eq.iter().map(|r| r.c).collect();
    let zeta_e: Vec<f64> = eq.iter().map(|r| r.zeta).collect();

    let mut a = jn.matmul_tr(&yn);
    let mut b = jn.mul_vec(&v_free);
    let g = jn.matmul_tr(&ye);
    let eq_factor = if eq.is_empty() {
        None
    } else {
        let mut s = je.matmul_tr(&ye);
        s.symmetrize();
        s.add_diagonal(&ce);
        let f = s.cholesky().map_err(SolverError::SolverDegenerate)?;
        // A -= G S⁻¹ Gᵀ,  b += G S⁻¹ (ζ_e − J_e ṽ)
        let x = f.solve_rows(&g);
        a = a.sub(&g.matmul_tr(&x));
        let je_v = je.mul_vec(&v_free);
        let rhs: Vec<f64> = zeta_e.iter().zip(&je_v).map(|(z, j)| z - j).collect();
        let corr = g.mul_vec(&f.solve(&rhs));
        for (bi, ci) in b.iter_mut().zip(corr) {
            *bi += ci;
        }
        Some(f)
    };
    a.symmetrize();
    Ok(ReducedSystem {
        dofs,
        je,
        jn,
        ye,
        yn,
        v_free,
        ce,
        zeta_e,
        eq_factor,
        g,
        a,
        b,
    })
}

/// `λ_e = (W_ee + C_e)⁻¹ (ζ_e − J_e ṽ − J_e M⁻¹ J_nᵀ λ_n)`.
pub fn recover_equality(rs: &ReducedSystem, lambda_n: &[f64]) -> Vec<f64> {
    let Some(f) = &rs.eq_factor else {
        return Vec::new();
    };
    let je_v = rs.je.mul_vec(&rs.v_free);
    let gt_l = rs.g.tr_mul_vec(lambda_n);
    let rhs: Vec<f64> = (0..je_v.len()).map(|i| rs.zeta_e[i] - je_v[i] - gt_l[i]).collect();
    f.solve(&rhs)
}

/// `v⁺ = ṽ + M⁻¹(J_eᵀ λ_e + J_nᵀ λ_n)` over the local dofs.
pub fn advance_velocity(rs: &ReducedSystem, lambda_e: &[f64], lambda_n: &[f64]) -> Vec<f64> {
    let mut v = rs.v_free.clone();
    if !lambda_e.is_empty() {
        for (vi, d) in v.iter_mut().zip(rs.ye.tr_mul_vec(lambda_e)) {
            *vi += d;
        }
    }
    if !lambda_n.is_empty() {
        for (vi, d) in v.iter_mut().zip(rs.yn.tr_mul_vec(lambda_n)) {
            *vi += d;
        }
    }
    v
}
