//! Constraint rows from equalities, contacts, joint limits and frictionloss.

use std::collections::BTreeMap;

use super::compliance::compliance_params;
use super::SolverError;
use crate::collision::ManifoldStore;
use crate::dynamics::{point_jacobian, DynamicsTerms, Kinematics, State};
use crate::linalg::{Quat, Vec3};
use crate::model::{EqualityKind, JointKind, Model};

/// Joint limits engage this far inside the range.
pub const LIMIT_MARGIN: f64 = 1e-4;
/// Restitution applies only above this approach speed (m/s).
pub const RESTITUTION_THRESHOLD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowKind {
    Equality,
    Normal,
    Friction,
    Limit,
    FrictionLoss,
}

/// Contact point a row belongs to; `dir` is 0 for the normal, 1 and 2 for tangents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContactRef {
    pub pair: (usize, usize),
    pub point: usize,
    pub dir: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintRow {
    pub kind: RowKind,
    /// Sparse Jacobian row, sorted by dof.
    pub j: Vec<(usize, f64)>,
    pub c: f64,
    pub zeta: f64,
    pub lo: f64,
    pub hi: f64,
    pub mu: f64,
    pub owner: Option<ContactRef>,
    /// For friction rows: index of the normal row in the inequality list.
    pub normal: Option<usize>,
    /// World direction of a contact row.
    pub dir: Vec3,
}

impl ConstraintRow {
    pub fn dense(&self, nv: usize) -> Vec<f64> {
        let mut out = vec![0.0; nv];
        for &(d, v) in &self.j {
            out[d] = v;
        }
        out
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.j.iter().map(|&(d, x)| x * v[d]).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConstraintSet {
    pub nv: usize,
    pub eq: Vec<ConstraintRow>,
    pub ineq: Vec<ConstraintRow>,
}

impl ConstraintSet {
    /// Dofs each row touches, equality rows first.
    pub fn coverage(&self) -> Vec<Vec<usize>> {
        self.eq
            .iter()
            .chain(&self.ineq)
            .map(|r| r.j.iter().map(|&(d, _)| d).collect())
            .collect()
    }
}

struct RowBuilder(BTreeMap<usize, f64>);

impl RowBuilder {
    fn new() -> Self {
        RowBuilder(BTreeMap::new())
    }

    fn point(&mut self, model: &Model, kin: &Kinematics, body: usize, p: Vec3, lin: Vec3, ang: Vec3, sign: f64) {
        if model.bodies[body].is_static() {
            return;
        }
        for (d, jl, ja) in point_jacobian(model, kin, body, p) {
            *self.0.entry(d).or_insert(0.0) += sign * (lin.dot(jl) + ang.dot(ja));
        }
    }

    fn dof(&mut self, d: usize, v: f64) {
        *self.0.entry(d).or_insert(0.0) += v;
    }

    fn finish(self) -> Vec<(usize, f64)> {
        self.0.into_iter().filter(|&(_, v)| v != 0.0).collect()
    }
}

/// Diagonal of `J M⁻¹ Jᵀ` for one sparse row.
pub fn effective_inverse_mass(model: &Model, terms: &DynamicsTerms, j: &[(usize, f64)]) -> f64 {
    let mut total = 0.0;
    let mut i = 0;
    while i < j.len() {
        let Some(tree) = model.bodies[model.dof_body[j[i].0]].tree else {
            i += 1;
            continue;
        };
        let range = terms.trees[tree].dofs.clone();
        let mut rhs = vec![0.0; range.len()];
        while i < j.len() && range.contains(&j[i].0) {
            rhs[j[i].0 - range.start] = j[i].1;
            i += 1;
        }
        let x = {
            let mut x = rhs.clone();
            terms.solve_tree(tree, &mut x);
            x
        };
        total += rhs.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
    }
    total
}

fn soft_row(
    model: &Model,
    terms: &DynamicsTerms,
    state: &State,
    h: f64,
    kind: RowKind,
    j: Vec<(usize, f64)>,
    r: f64,
    solref: [f64; 2],
    solimp: &[f64; 5],
) -> Result<ConstraintRow, SolverError> {
    let a = effective_inverse_mass(model, terms, &j);
    let row = ConstraintRow {
        kind,
        j,
        c: 0.0,
        zeta: 0.0,
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        mu: 0.0,
        owner: None,
        normal: None,
        dir: Vec3::ZERO,
    };
    let u = row.dot(&state.v);
    let (c, zeta) = compliance_params(solref, solimp, r, u, h, a)?;
    Ok(ConstraintRow { c, zeta, ..row })
}

fn hard_row(kind: RowKind, j: Vec<(usize, f64)>, zeta: f64, lo: f64, hi: f64) -> ConstraintRow {
    ConstraintRow {
        kind,
        j,
        c: 0.0,
        zeta,
        lo,
        hi,
        mu: 0.0,
        owner: None,
        normal: None,
        dir: Vec3::ZERO,
    }
}

fn equality_rows(
    model: &Model,
    state: &State,
    kin: &Kinematics,
    terms: &DynamicsTerms,
    h: f64,
    out: &mut Vec<ConstraintRow>,
) -> Result<(), SolverError> {
    for eq in &model.equalities {
        let mut push = |j: Vec<(usize, f64)>, r: f64| -> Result<(), SolverError> {
            if !j.is_empty() {
                out.push(soft_row(model, terms, state, h, RowKind::Equality, j, r, eq.solref, &eq.solimp)?);
            }
            Ok(())
        };
        match eq.kind {
            EqualityKind::Connect {
                body1,
                body2,
                anchor1,
                anchor2,
            }
            | EqualityKind::Weld {
                body1,
                body2,
                anchor1,
                anchor2,
                ..
            } => {
                let p1 = kin.xform[body1].apply(anchor1);
                let p2 = kin.xform[body2].apply(anchor2);
                let err = p1 - p2;
                for ax in 0..3 {
                    let e = Vec3::axis(ax);
                    let mut b = RowBuilder::new();
                    b.point(model, kin, body1, p1, e, Vec3::ZERO, 1.0);
                    b.point(model, kin, body2, p2, e, Vec3::ZERO, -1.0);
                    push(b.finish(), err[ax])?;
                }
                if let EqualityKind::Weld { relpose, .. } = eq.kind {
                    let q1 = kin.xform[body1].rotation;
                    let target = kin.xform[body2].rotation.hamilton(relpose);
                    let rv = rotation_error(q1, target);
                    for ax in 0..3 {
                        let e = Vec3::axis(ax);
                        let mut b = RowBuilder::new();
                        b.point(model, kin, body1, p1, Vec3::ZERO, e, 1.0);
                        b.point(model, kin, body2, p2, Vec3::ZERO, e, -1.0);
                        push(b.finish(), rv[ax])?;
                    }
                }
            }
            EqualityKind::Joint { joint1, joint2, polycoef } => {
                let j1 = &model.joints[joint1];
                let mut b = RowBuilder::new();
                b.dof(j1.dof_adr, 1.0);
                let mut r = state.q[j1.qpos_adr];
                match joint2 {
                    Some(j2) => {
                        let j2 = &model.joints[j2];
                        let x = state.q[j2.qpos_adr];
                        let (mut val, mut slope, mut pw) = (0.0, 0.0, 1.0);
                        for (k, &ck) in polycoef.iter().enumerate() {
                            val += ck * pw;
                            if k < 4 {
                                slope += (k + 1) as f64 * polycoef[k + 1] * pw;
                            }
                            pw *= x;
                        }
                        r -= val;
                        b.dof(j2.dof_adr, -slope);
                    }
                    None => r -= polycoef[0],
                }
                push(b.finish(), r)?;
            }
        }
    }
    Ok(())
}

/// World-frame rotation vector taking `target` to `q`.
fn rotation_error(q: Quat, target: Quat) -> Vec3 {
    q.hamilton(target.conjugate()).canonicalize().to_rotation_vector()
}

fn tangent_basis(n: Vec3) -> (Vec3, Vec3) {
    let t1 = n.any_orthonormal();
    (t1, n.cross(t1))
}

fn contact_rows(
    model: &Model,
    state: &State,
    kin: &Kinematics,
    terms: &DynamicsTerms,
    manifolds: &ManifoldStore,
    h: f64,
    out: &mut Vec<ConstraintRow>,
) -> Result<(), SolverError> {
    for (&pair, m) in &manifolds.manifolds {
        let (b1, b2) = (model.geoms[m.geom1].body, model.geoms[m.geom2].body);
        for (pi, p) in m.points.iter().enumerate() {
            let (t1, t2) = tangent_basis(p.normal);
            let row_j = |dir: Vec3| {
                let mut b = RowBuilder::new();
                b.point(model, kin, b1, p.pos, dir, Vec3::ZERO, 1.0);
                b.point(model, kin, b2, p.pos, dir, Vec3::ZERO, -1.0);
                b.finish()
            };
            let jn = row_j(p.normal);
            if jn.is_empty() {
                continue;
            }
            let owner = |dir| Some(ContactRef { pair, point: pi, dir });
            let u = jn.iter().map(|&(d, x)| x * state.v[d]).sum::<f64>();
            let r = -p.depth;
            let impact = p.restitution > 0.0 && u < -RESTITUTION_THRESHOLD && (r <= 0.0 || -u * h > r);
            let mut normal = if impact {
                hard_row(RowKind::Normal, jn, -p.restitution * u, 0.0, f64::INFINITY)
            } else if r > 0.0 {
                // still separated: allow closing the gap within this step
                hard_row(RowKind::Normal, jn, -r / h, 0.0, f64::INFINITY)
            } else {
                let mut row = soft_row(model, terms, state, h, RowKind::Normal, jn, r, p.solref, &p.solimp)?;
                row.lo = 0.0;
                row
            };
            normal.owner = owner(0);
            normal.dir = p.normal;
            let ni = out.len();
            out.push(normal);
            if p.condim >= 3 {
                for (k, t) in [t1, t2].into_iter().enumerate() {
                    let mut row = hard_row(RowKind::Friction, row_j(t), 0.0, 0.0, 0.0);
                    row.mu = p.friction;
                    row.owner = owner(k + 1);
                    row.normal = Some(ni);
                    row.dir = t;
                    out.push(row);
                }
            }
        }
    }
    Ok(())
}

fn joint_rows(model: &Model, state: &State, terms: &DynamicsTerms, h: f64, out: &mut Vec<ConstraintRow>) -> Result<(), SolverError> {
    for jt in &model.joints {
        if matches!(jt.kind, JointKind::Hinge | JointKind::Slide) {
            if let Some((lo, hi)) = jt.range {
                let q = state.q[jt.qpos_adr];
                for (r, sign) in [(q - lo, 1.0), (hi - q, -1.0)] {
                    if r < LIMIT_MARGIN {
                        let j = vec![(jt.dof_adr, sign)];
                        let mut row = if r > 0.0 {
                            hard_row(RowKind::Limit, j, -r / h, 0.0, f64::INFINITY)
                        } else {
                            soft_row(model, terms, state, h, RowKind::Limit, j, r, jt.solref_limit, &jt.solimp_limit)?
                        };
                        row.lo = 0.0;
                        row.hi = f64::INFINITY;
                        out.push(row);
                    }
                }
            }
        }
        if jt.frictionloss > 0.0 {
            let f = jt.frictionloss * h;
            for d in jt.dof_adr..jt.dof_adr + jt.kind.nv() {
                out.push(hard_row(RowKind::FrictionLoss, vec![(d, 1.0)], 0.0, -f, f));
            }
        }
    }
    Ok(())
}

/// Builds every row for the current step. Inequality order is contacts
/// (manifold, point, normal then tangents), then limits and frictionloss.
pub fn assemble_constraints(
    model: &Model,
    state: &State,
    kin: &Kinematics,
    terms: &DynamicsTerms,
    manifolds: &ManifoldStore,
    h: f64,
) -> Result<ConstraintSet, SolverError> {
    let mut cs = ConstraintSet {
        nv: model.nv,
        ..Default::default()
    };
    equality_rows(model, state, kin, terms, h, &mut cs.eq)?;
    contact_rows(model, state, kin, terms, manifolds, h, &mut cs.ineq)?;
    joint_rows(model, state, terms, h, &mut cs.ineq)?;
    Ok(cs)
}
