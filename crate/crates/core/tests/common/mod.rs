//! Oracles and generators shared by the integration tests. Nothing here
//! calls into the solver; it only builds inputs and checks outputs.
#![allow(dead_code)]

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use playground_core::batch::BatchPoses;
use playground_core::collision::ManifoldStore;
use playground_core::dynamics::{forward_kinematics, integrate, DynamicsTerms, State};
use playground_core::exec::Pool;
use playground_core::linalg::{Quat, Vec3};
use playground_core::mjcf::load_model;
use playground_core::model::{JointKind, Model};
use playground_core::rlgk::{bind_template, Assignment, GaussianTemplate, PointCloud};
use playground_core::solver::{build_islands, solve_rows, solve_step, ConstraintRow, ConstraintSet, RowKind, Solution, SolverOptions};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn quat(rng: &mut ChaCha8Rng) -> Quat {
    loop {
        let q = Quat::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            return q.normalize();
        }
    }
}

/// A forest of up to `max_nv` dofs: hinge/slide chains, ball bodies and
/// free bodies with random axes and masses.
pub fn random_model(rng: &mut ChaCha8Rng, max_nv: usize) -> Model {
    let mut x = String::from("<mujoco><worldbody>\n");
    let mut nv = 0;
    let mut body = 0;
    while nv < max_nv {
        let left = max_nv - nv;
        let kind = rng.random_range(
            0..if left >= 6 {
                4
            } else if left >= 3 {
                3
            } else {
                2
            },
        );
        let geom = |rng: &mut ChaCha8Rng| {
            format!(
                r#"<geom type="box" size="{} {} {}" mass="{}" pos="{} 0 0"/>"#,
                rng.random_range(0.05..0.3),
                rng.random_range(0.05..0.3),
                rng.random_range(0.05..0.3),
                rng.random_range(0.5..2.0),
                rng.random_range(-0.2..0.2),
            )
        };
        let pos = format!(
            "{} {} {}",
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..1.0)
        );
        match kind {
            0 | 1 => {
                let links = rng.random_range(1..=left.min(3));
                let mut close = 0;
                for k in 0..links {
                    let a = unit(rng);
                    let jt = if rng.random_bool(0.7) { "hinge" } else { "slide" };
                    let p = if k == 0 { pos.clone() } else { "0.3 0 0".into() };
                    let g = geom(rng);
                    let _ = write!(
                        x,
                        r#"<body name="b{body}" pos="{p}"><joint type="{jt}" axis="{} {} {}"/>{g}"#,
                        a.x, a.y, a.z
                    );
                    body += 1;
                    close += 1;
                }
                x.push_str(&"</body>".repeat(close));
                nv += links;
            }
            2 => {
                let g = geom(rng);
                let _ = write!(x, r#"<body name="b{body}" pos="{pos}"><joint type="ball"/>{g}</body>"#);
                body += 1;
                nv += 3;
            }
            _ => {
                let g = geom(rng);
                let _ = write!(x, r#"<body name="b{body}" pos="{pos}"><freejoint/>{g}</body>"#);
                body += 1;
                nv += 6;
            }
        }
        x.push('\n');
    }
    x.push_str("</worldbody></mujoco>");
    load_model(&x).expect("generated model compiles")
}

pub fn random_state(model: &Model, rng: &mut ChaCha8Rng) -> State {
    let mut s = State::new(model);
    for j in &model.joints {
        let (qa, da) = (j.qpos_adr, j.dof_adr);
        match j.kind {
            JointKind::Hinge | JointKind::Slide => s.q[qa] = rng.random_range(-1.0..1.0),
            JointKind::Ball => s.q[qa..qa + 4].copy_from_slice(&quat(rng).to_array()),
            JointKind::Free => {
                s.q[qa + 3..qa + 7].copy_from_slice(&quat(rng).to_array());
            }
        }
        for d in da..da + j.kind.nv() {
            s.v[d] = rng.random_range(-1.0..1.0);
        }
    }
    s
}

pub struct Instance {
    pub model: Model,
    pub state: State,
    pub terms: DynamicsTerms,
    pub cs: ConstraintSet,
    pub h: f64,
}

impl Instance {
    pub fn eq_rows(&self) -> Vec<usize> {
        (0..self.cs.eq.len()).collect()
    }

    pub fn ineq_rows(&self) -> Vec<usize> {
        (0..self.cs.ineq.len()).collect()
    }
}

fn dense_row(rng: &mut ChaCha8Rng, nv: usize) -> Vec<(usize, f64)> {
    (0..nv).map(|d| (d, rng.random_range(-1.0..1.0))).collect()
}

pub fn row(kind: RowKind, j: Vec<(usize, f64)>, c: f64, zeta: f64, lo: f64, hi: f64) -> ConstraintRow {
    ConstraintRow {
        kind,
        j,
        c,
        zeta,
        lo,
        hi,
        mu: 0.0,
        owner: None,
        normal: None,
        dir: Vec3::ZERO,
    }
}

/// Random rows over a random model. Contacts are a normal row plus
/// `friction` tangent rows, all projections of one random point Jacobian
/// onto an orthonormal frame; tangent rows are hard and unbiased, as the
/// engine builds them. Boxes are symmetric soft rows. The model has at
/// least as many dofs as there are hard rows so the system stays definite.
pub fn random_instance(rng: &mut ChaCha8Rng, max_nv: usize, ne: usize, contacts: usize, friction: usize, boxes: usize) -> Instance {
    let min_nv = (contacts * friction).max(1);
    let nv_cap = rng.random_range(min_nv..=max_nv.max(min_nv));
    let model = random_model(rng, nv_cap);
    let state = random_state(&model, rng);
    let kin = forward_kinematics(&model, &state);
    let h = 0.01;
    let terms = DynamicsTerms::compute(&model, &state, &kin, &vec![0.0; model.nu()], h, &Pool::sequential()).unwrap();
    let nv = model.nv;
    let mut cs = ConstraintSet {
        nv,
        eq: Vec::new(),
        ineq: Vec::new(),
    };
    for _ in 0..ne.min(nv) {
        let c = rng.random_range(0.01..0.5);
        cs.eq.push(row(
            RowKind::Equality,
            dense_row(rng, nv),
            c,
            rng.random_range(-1.0..1.0),
            f64::NEG_INFINITY,
            f64::INFINITY,
        ));
    }
    for _ in 0..contacts {
        let p: Vec<Vec3> = (0..nv)
            .map(|_| {
                Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let n = unit(rng);
        let t1 = n.any_orthonormal();
        let frame = [n, t1, n.cross(t1)];
        let project = |d: Vec3| -> Vec<(usize, f64)> { p.iter().enumerate().map(|(k, c)| (k, d.dot(*c))).collect() };
        let ni = cs.ineq.len();
        let c = rng.random_range(0.01..0.5);
        cs.ineq
            .push(row(RowKind::Normal, project(n), c, rng.random_range(-0.5..1.5), 0.0, f64::INFINITY));
        let mu = rng.random_range(0.1..1.0);
        for t in &frame[1..=friction.min(2)] {
            let mut r = row(RowKind::Friction, project(*t), 0.0, 0.0, 0.0, 0.0);
            r.mu = mu;
            r.normal = Some(ni);
            cs.ineq.push(r);
        }
    }
    for _ in 0..boxes {
        let a = rng.random_range(0.05..1.0);
        cs.ineq.push(row(
            RowKind::Limit,
            dense_row(rng, nv),
            rng.random_range(0.01..0.5),
            rng.random_range(-2.0..2.0),
            -a,
            a,
        ));
    }
    Instance {
        model,
        state,
        terms,
        cs,
        h,
    }
}

/// A box moving in the xz-plane (x/z slides, y hinge) touching two random
/// surfaces: each contact gets a normal row and one in-plane tangent row.
pub fn planar_box_instance(rng: &mut ChaCha8Rng) -> Instance {
    let x = format!(
        r#"<mujoco><worldbody><body name="box"><joint name="x" type="slide" axis="1 0 0"/><joint name="z" type="slide" axis="0 0 1"/><joint name="r" type="hinge" axis="0 1 0"/><geom type="box" size="{} 0.1 {}" mass="{}"/></body></worldbody></mujoco>"#,
        rng.random_range(0.05..0.5),
        rng.random_range(0.05..0.5),
        rng.random_range(0.2..3.0),
    );
    let model = load_model(&x).expect("planar box compiles");
    let state = random_state(&model, rng);
    let kin = forward_kinematics(&model, &state);
    let h = 0.01;
    let terms = DynamicsTerms::compute(&model, &state, &kin, &[], h, &Pool::sequential()).unwrap();
    let origin = kin.body_pos(1);
    let mut cs = ConstraintSet {
        nv: 3,
        eq: Vec::new(),
        ineq: Vec::new(),
    };
    let mu = rng.random_range(0.1..1.0);
    for k in 0..2 {
        // floor-ish first contact, anything for the second
        let a: f64 = if k == 0 {
            rng.random_range(-1.0..1.0)
        } else {
            rng.random_range(-3.1..3.1)
        };
        let n = (a.sin(), a.cos());
        let t = (n.1, -n.0);
        let r = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        let p = (origin.x + r.0, origin.z + r.1);
        let jac = |d: (f64, f64)| vec![(0, d.0), (1, d.1), (2, d.0 * (p.1 - origin.z) - d.1 * (p.0 - origin.x))];
        let ni = cs.ineq.len();
        cs.ineq.push(row(
            RowKind::Normal,
            jac(n),
            rng.random_range(0.01..0.5),
            rng.random_range(-0.5..1.5),
            0.0,
            f64::INFINITY,
        ));
        let mut f = row(RowKind::Friction, jac(t), 0.0, 0.0, 0.0, 0.0);
        f.mu = mu;
        f.normal = Some(ni);
        cs.ineq.push(f);
    }
    Instance {
        model,
        state,
        terms,
        cs,
        h,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Lo,
    Hi,
    Free,
}

#[derive(Clone, Debug)]
pub struct KktSolution {
    pub v: Vec<f64>,
    pub lambda_e: Vec<f64>,
    pub lambda_n: Vec<f64>,
    pub status: Vec<Status>,
}

fn bounds_of(r: &ConstraintRow, lambda: &[f64]) -> (f64, f64) {
    match r.normal {
        Some(n) => {
            let f = r.mu * lambda[n].max(0.0);
            (-f, f)
        }
        None => (r.lo, r.hi),
    }
}

/// Solves the stacked system
///
/// ```text
/// [ M   -Jeᵀ  -Jnᵀ ] [v ]   [M ṽ]
/// [ Je   Ce    0   ] [λe] = [ζe ]
/// [ rows by status ] [λn]   [...]
/// ```
///
/// for every assignment of lower / upper / interior status to the
/// inequality rows and keeps the assignments whose solution satisfies the
/// box complementarity conditions.
pub fn kkt_enumerate(inst: &Instance) -> Vec<KktSolution> {
    let nv = inst.cs.nv;
    let ne = inst.cs.eq.len();
    let nn = inst.cs.ineq.len();
    let n = nv + ne + nn;
    let m = inst.terms.mass_dense(nv);
    let vt = &inst.terms.v_free;
    let mut base = DMatrix::<f64>::zeros(n, n);
    let mut rhs0 = DVector::<f64>::zeros(n);
    for i in 0..nv {
        for j in 0..nv {
            base[(i, j)] = m[(i, j)];
            rhs0[i] += m[(i, j)] * vt[j];
        }
    }
    for (k, r) in inst.cs.eq.iter().enumerate() {
        for &(d, x) in &r.j {
            base[(d, nv + k)] -= x;
            base[(nv + k, d)] += x;
        }
        base[(nv + k, nv + k)] += r.c;
        rhs0[nv + k] = r.zeta;
    }
    for (k, r) in inst.cs.ineq.iter().enumerate() {
        for &(d, x) in &r.j {
            base[(d, nv + ne + k)] -= x;
        }
    }
    let choices: Vec<Vec<Status>> = inst
        .cs
        .ineq
        .iter()
        .map(|r| {
            let mut c = vec![Status::Free];
            if r.normal.is_some() || r.lo.is_finite() {
                c.push(Status::Lo);
            }
            if r.normal.is_some() || r.hi.is_finite() {
                c.push(Status::Hi);
            }
            c
        })
        .collect();
    let total: usize = choices.iter().map(Vec::len).product();
    let scale = 1.0 + rhs0.amax();
    let eps = 1e-9 * scale;
    let mut out: Vec<KktSolution> = Vec::new();
    for code in 0..total {
        let mut c = code;
        let status: Vec<Status> = choices
            .iter()
            .map(|ch| {
                let s = ch[c % ch.len()];
                c /= ch.len();
                s
            })
            .collect();
        let mut a = base.clone();
        let mut b = rhs0.clone();
        for (k, r) in inst.cs.ineq.iter().enumerate() {
            let row = nv + ne + k;
            let col = nv + ne + k;
            match (status[k], r.normal) {
                (Status::Free, _) => {
                    for &(d, x) in &r.j {
                        a[(row, d)] = x;
                    }
                    a[(row, col)] = r.c;
                    b[row] = r.zeta;
                }
                (s, Some(nrm)) => {
                    a[(row, col)] = 1.0;
                    a[(row, nv + ne + nrm)] = if s == Status::Lo { r.mu } else { -r.mu };
                }
                (s, None) => {
                    a[(row, col)] = 1.0;
                    b[row] = if s == Status::Lo { r.lo } else { r.hi };
                }
            }
        }
        let Some(x) = a.lu().solve(&b) else { continue };
        let v: Vec<f64> = x.rows(0, nv).iter().copied().collect();
        let le: Vec<f64> = x.rows(nv, ne).iter().copied().collect();
        let ln: Vec<f64> = x.rows(nv + ne, nn).iter().copied().collect();
        let feasible = inst.cs.ineq.iter().enumerate().all(|(k, r)| {
            let w = r.dot(&v) + r.c * ln[k] - r.zeta;
            let (lo, hi) = bounds_of(r, &ln);
            if r.normal.is_some_and(|nrm| ln[nrm] < -eps) {
                return false;
            }
            match status[k] {
                Status::Free => ln[k] >= lo - eps && ln[k] <= hi + eps,
                Status::Lo => w >= -eps,
                Status::Hi => w <= eps,
            }
        });
        if !feasible {
            continue;
        }
        let dup = out.iter().any(|s| {
            s.lambda_n
                .iter()
                .zip(&ln)
                .chain(s.lambda_e.iter().zip(&le))
                .all(|(p, q)| (p - q).abs() < 1e-7)
        });
        if !dup {
            out.push(KktSolution {
                v,
                lambda_e: le,
                lambda_n: ln,
                status,
            });
        }
    }
    out
}

/// Status of each inequality row at `lambda`, or `None` when the row sits
/// on a bound with zero velocity (either label fits).
pub fn classify(cs: &ConstraintSet, v: &[f64], lambda: &[f64], tol: f64) -> Vec<Option<Status>> {
    cs.ineq
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let (lo, hi) = bounds_of(r, lambda);
            let w = r.dot(v) + r.c * lambda[k] - r.zeta;
            let at_lo = (lambda[k] - lo).abs() < tol;
            let at_hi = (lambda[k] - hi).abs() < tol;
            if (at_lo || at_hi) && w.abs() < tol {
                None
            } else if at_lo && !at_hi {
                Some(Status::Lo)
            } else if at_hi && !at_lo {
                Some(Status::Hi)
            } else if at_lo && at_hi {
                // zero-width friction box
                Some(if w > 0.0 { Status::Lo } else { Status::Hi })
            } else {
                Some(Status::Free)
            }
        })
        .collect()
}

/// Natural-map residual recomputed in the full space from `v⁺`.
pub fn full_residual(cs: &ConstraintSet, v: &[f64], lambda: &[f64]) -> f64 {
    cs.ineq
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let w = r.dot(v) + r.c * lambda[k] - r.zeta;
            let (lo, hi) = bounds_of(r, lambda);
            (lambda[k] - (lambda[k] - w).clamp(lo, hi)).abs()
        })
        .fold(0.0, f64::max)
}

/// Plain union-find over `n` items; returns the sorted components of the
/// items that appear in at least one edge list.
pub fn components(n: usize, edges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    let mut seen = vec![false; n];
    for e in edges {
        for &x in e {
            seen[x] = true;
            let (a, b) = (find(&mut parent, e[0]), find(&mut parent, x));
            parent[a] = b;
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for x in 0..n {
        if seen[x] {
            let r = find(&mut parent, x);
            groups.entry(r).or_default().push(x);
        }
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Rotation matrix of a unit quaternion, written out from the components.
pub fn rot(q: Quat) -> [[f64; 3]; 3] {
    let [w, x, y, z] = q.to_array();
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Hamilton product from the component formula.
pub fn qmul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

/// Angle between two unit quaternions as rotations, from `a ⊗ b⁻¹`.
/// `atan2` keeps full precision near zero where `acos` would not.
pub fn quat_angle(a: [f64; 4], b: [f64; 4]) -> f64 {
    let d = qmul(a, [b[0], -b[1], -b[2], -b[3]]);
    let s = (d[1] * d[1] + d[2] * d[2] + d[3] * d[3]).sqrt();
    2.0 * s.atan2(d[0].abs())
}

/// Tight solve of every row of an instance as one system.
pub fn solve_tight(inst: &Instance) -> Solution {
    let opts = SolverOptions {
        max_iters: 1_000_000,
        tol: 1e-14,
        warm_start: false,
    };
    solve_rows(
        &inst.model,
        &inst.cs,
        &inst.terms,
        &ManifoldStore::default(),
        &inst.eq_rows(),
        &inst.ineq_rows(),
        &opts,
    )
    .unwrap()
}

/// `v⁺` of a solution scattered back to global dofs, `ṽ` elsewhere.
pub fn global_v(inst: &Instance, sol: &Solution) -> Vec<f64> {
    let mut v = inst.terms.v_free.clone();
    for (&d, &x) in sol.dofs.iter().zip(&sol.v_plus) {
        v[d] = x;
    }
    v
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Default)]
pub struct OracleReport {
    pub instances: usize,
    pub max_dlambda: f64,
    pub max_dv: f64,
    pub max_residual: f64,
    /// Instances where the oracle found more than one solution; ours is
    /// compared with the nearest.
    pub ambiguous: usize,
    /// Instances whose active set differs from the oracle's.
    pub active_set_mismatches: usize,
}

/// Reduced solve vs stacked KKT enumeration on random instances.
pub fn kkt_oracle_run(seed: u64, count: usize, frictional: bool) -> OracleReport {
    let mut r = rng(seed);
    let mut rep = OracleReport::default();
    for _ in 0..count {
        let inst = if frictional {
            planar_box_instance(&mut r)
        } else {
            let ne = r.random_range(0..=4);
            let contacts = r.random_range(0..=3);
            let b = r.random_range(0..=6 - contacts);
            random_instance(&mut r, 8, ne, contacts, 0, b)
        };
        let sol = solve_tight(&inst);
        let v = global_v(&inst, &sol);
        rep.instances += 1;
        rep.max_residual = rep.max_residual.max(full_residual(&inst.cs, &v, &sol.lambda_n));
        let oracle = kkt_enumerate(&inst);
        if oracle.len() != 1 {
            rep.ambiguous += 1;
        }
        let Some(o) = oracle.iter().min_by(|a, b| {
            let da = max_diff(&a.lambda_n, &sol.lambda_n);
            let db = max_diff(&b.lambda_n, &sol.lambda_n);
            da.total_cmp(&db)
        }) else {
            rep.max_dlambda = f64::INFINITY;
            continue;
        };
        rep.max_dlambda = rep
            .max_dlambda
            .max(max_diff(&o.lambda_n, &sol.lambda_n))
            .max(max_diff(&o.lambda_e, &sol.lambda_e));
        rep.max_dv = rep.max_dv.max(max_diff(&o.v, &v));
        let ours = classify(&inst.cs, &v, &sol.lambda_n, 1e-9);
        let theirs = classify(&inst.cs, &o.v, &o.lambda_n, 1e-9);
        if ours.iter().zip(&theirs).any(|(a, b)| a.is_some() && b.is_some() && a != b) {
            rep.active_set_mismatches += 1;
        }
    }
    rep
}

/// Free bodies and short hinge chains, `n` bodies in total.
pub fn forest(rng: &mut ChaCha8Rng, n: usize) -> Model {
    let mut x = String::from("<mujoco><worldbody>\n");
    let mut left = n;
    let mut k = 0;
    while left > 0 {
        let links = if rng.random_bool(0.5) {
            1
        } else {
            rng.random_range(1..=left.min(3))
        };
        if links == 1 && rng.random_bool(0.5) {
            let _ = write!(
                x,
                r#"<body name="b{k}" pos="{k} 0 1"><freejoint/><geom type="sphere" size="0.1"/></body>"#
            );
        } else {
            for i in 0..links {
                let p = if i == 0 { format!("{k} 0 1") } else { "0.3 0 0".into() };
                let _ = write!(
                    x,
                    r#"<body name="b{}" pos="{p}"><joint type="hinge" axis="0 1 0"/><geom type="capsule" fromto="0 0 0 0.3 0 0" size="0.05"/>"#,
                    k + i
                );
            }
            x.push_str(&"</body>".repeat(links));
        }
        k += links;
        left -= links;
        x.push('\n');
    }
    x.push_str("</worldbody></mujoco>");
    load_model(&x).unwrap()
}

pub struct Graph {
    pub model: Model,
    pub terms: DynamicsTerms,
    pub cs: ConstraintSet,
    /// Body pairs each row touches, plus parent links, for the oracle.
    pub edges: Vec<Vec<usize>>,
}

pub fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    let n = rng.random_range(2..=32);
    let model = forest(rng, n);
    let state = random_state(&model, rng);
    let kin = forward_kinematics(&model, &state);
    let terms = DynamicsTerms::compute(&model, &state, &kin, &[], 0.01, &Pool::sequential()).unwrap();
    let mut cs = ConstraintSet {
        nv: model.nv,
        eq: Vec::new(),
        ineq: Vec::new(),
    };
    let mut edges = Vec::new();
    let nrows = rng.random_range(0..=2 * n);
    for _ in 0..nrows {
        // body 0 is the world
        let a = rng.random_range(1..=n);
        let b = rng.random_range(0..=n);
        let mut j = Vec::new();
        let mut touched = Vec::new();
        for body in [a, b] {
            if body == 0 || touched.contains(&body) {
                continue;
            }
            touched.push(body);
            for d in model.bodies[body].dofs.clone() {
                j.push((d, rng.random_range(-1.0..1.0)));
            }
        }
        j.sort_by_key(|e| e.0);
        edges.push(touched);
        let c = rng.random_range(0.01..0.5);
        if rng.random_bool(0.2) {
            cs.eq.push(row(
                RowKind::Equality,
                j,
                c,
                rng.random_range(-1.0..1.0),
                f64::NEG_INFINITY,
                f64::INFINITY,
            ));
        } else {
            cs.ineq
                .push(row(RowKind::Normal, j, c, rng.random_range(-0.5..1.5), 0.0, f64::INFINITY));
        }
    }
    // a row on one body drags in its whole tree
    let mut tree_edges: Vec<Vec<usize>> = Vec::new();
    for (b, body) in model.bodies.iter().enumerate().skip(1) {
        if body.parent != 0 {
            tree_edges.push(vec![body.parent, b]);
        }
    }
    Graph {
        model,
        terms,
        cs,
        edges: edges.into_iter().chain(tree_edges).collect(),
    }
}

// ---------- rlgk ----------

pub const ROBOT: &str = r#"<mujoco><worldbody>
  <body name="torso" pos="0 0 1"><freejoint/><geom type="box" size="0.2 0.1 0.3"/>
    <body name="arm" pos="0.3 0 0.2"><joint type="ball"/><geom type="capsule" fromto="0 0 0 0.3 0 0" size="0.04"/>
      <body name="hand" pos="0.3 0 0"><joint type="hinge" axis="0 1 0"/><geom type="sphere" size="0.05"/></body>
    </body>
    <body name="leg" pos="0 0 -0.4"><joint type="hinge" axis="1 0 0"/><geom type="capsule" fromto="0 0 0 0 0 -0.4" size="0.05"/></body>
  </body></worldbody></mujoco>"#;

/// `m` random oriented points, each bound to a random body.
pub fn random_template(rng: &mut ChaCha8Rng, model: &Model, m: usize) -> GaussianTemplate {
    let mut cloud = PointCloud::new((0..m).map(|_| unit(rng) * rng.random_range(0.0..1.5)).collect());
    cloud.orientations = (0..m).map(|_| quat(rng)).collect();
    let bodies = (0..m).map(|_| rng.random_range(0..model.nbody())).collect();
    bind_template(&cloud, model, &Assignment::PerPoint(bodies)).unwrap()
}

pub fn random_poses(rng: &mut ChaCha8Rng, b: usize, nbody: usize) -> BatchPoses {
    let mut p = BatchPoses::new(b, nbody);
    for e in 0..b {
        for k in 0..nbody {
            p.set_pose(e, k, unit(rng) * rng.random_range(0.0..3.0), quat(rng));
        }
    }
    p
}

/// `r·v + t` with a plain row-by-row product.
pub fn apply(r: [[f64; 3]; 3], v: Vec3, t: Vec3) -> Vec3 {
    let v = v.to_array();
    let row = |i: usize| r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2];
    Vec3::new(row(0), row(1), row(2)) + t
}

// ---------- mjcf fixtures ----------

pub const FIXTURES: &[&str] = &[
    "options",
    "defaults",
    "degree",
    "radian",
    "eulerseq",
    "extrinsic",
    "autolimits",
    "autolimits_off",
    "geoms",
    "actuators",
    "equality",
    "sensors",
];

pub fn fixture(name: &str, ext: &str) -> String {
    let p: std::path::PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", "mjcf", &format!("{name}.{ext}")]
        .iter()
        .collect();
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

// ---------- dynamics ----------

pub const DOUBLE_PENDULUM: &str = r#"<mujoco><compiler angle="radian"/><worldbody>
    <body name="a" pos="0 0 2"><joint axis="0 1 0"/><geom type="capsule" fromto="0 0 0 0 0 -0.5" size="0.05"/>
      <body name="b" pos="0 0 -0.5" euler="0.2 0 0"><joint axis="1 1 0"/><geom type="box" pos="0.1 0 -0.25" size="0.05 0.07 0.25"/>
      </body></body></worldbody></mujoco>"#;

fn na3(v: Vec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

/// Kinetic energy from centre-of-mass and angular velocities obtained by
/// central differences of the pose along `v`.
pub fn kinetic_fd(m: &Model, s: &State) -> f64 {
    let eps = 1e-5;
    let shifted = |sign: f64| {
        let v: Vec<f64> = s.v.iter().map(|x| x * sign).collect();
        forward_kinematics(m, &integrate(m, s, &v, eps).unwrap())
    };
    let (kp, km, k0) = (shifted(1.0), shifted(-1.0), forward_kinematics(m, s));
    (1..m.nbody())
        .map(|b| {
            let body = &m.bodies[b];
            let vcom = na3(kp.xcom[b] - km.xcom[b]) / (2.0 * eps);
            let rp = DMatrix::from_row_slice(3, 3, &rot(kp.xform[b].rotation).concat());
            let rm = DMatrix::from_row_slice(3, 3, &rot(km.xform[b].rotation).concat());
            // skew(ω) ≈ (R₊ − R₋)/2ε · R₀ᵀ
            let r0 = DMatrix::from_row_slice(3, 3, &rot(k0.xform[b].rotation).concat());
            let w = (&rp - &rm) / (2.0 * eps) * r0.transpose();
            let omega = Vector3::new(
                0.5 * (w[(2, 1)] - w[(1, 2)]),
                0.5 * (w[(0, 2)] - w[(2, 0)]),
                0.5 * (w[(1, 0)] - w[(0, 1)]),
            );
            let i_body = Matrix3::from_fn(|i, j| body.inertia.m[i][j]);
            let r = Matrix3::from_fn(|i, j| r0[(i, j)]);
            let i_world = r * i_body * r.transpose();
            0.5 * body.mass * vcom.norm_squared() + 0.5 * omega.dot(&(i_world * omega))
        })
        .sum()
}

/// Gravitational potential of all bodies, from the centre-of-mass heights.
pub fn potential(m: &Model, s: &State) -> f64 {
    let k = forward_kinematics(m, s);
    (1..m.nbody())
        .map(|b| -m.bodies[b].mass * na3(m.opt.gravity).dot(&na3(k.xcom[b])))
        .sum()
}

/// Worst `|M − ∂²T/∂v²|` over the lower triangle, relative to the largest
/// diagonal entry. `T` is quadratic in `v`, so polarization is exact.
pub fn mass_matrix_hessian_error(m: &Model, s: &State) -> f64 {
    let mm = playground_core::dynamics::mass_matrix(m, &forward_kinematics(m, s));
    let energy = |u: &[f64]| {
        let mut t = s.clone();
        t.v = u.to_vec();
        kinetic_fd(m, &t)
    };
    let basis = |idx: &[usize]| {
        let mut e = vec![0.0; m.nv];
        for &i in idx {
            e[i] = 1.0;
        }
        e
    };
    let scale = (0..m.nv).map(|i| mm[(i, i)].abs()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for i in 0..m.nv {
        for j in 0..=i {
            let oracle = if i == j {
                2.0 * energy(&basis(&[i]))
            } else {
                energy(&basis(&[i, j])) - energy(&basis(&[i])) - energy(&basis(&[j]))
            };
            worst = worst.max((mm[(i, j)] - oracle).abs() / scale);
        }
    }
    worst
}

/// Largest relative total-energy drift of the double pendulum over
/// `steps` unconstrained steps at `h`.
pub fn pendulum_energy_drift(steps: usize, h: f64) -> f64 {
    let m = load_model(DOUBLE_PENDULUM).unwrap();
    let mut s = State::new(&m);
    s.q = vec![1.0, -0.5];
    let total = |s: &State| kinetic_fd(&m, s) + potential(&m, s);
    let e0 = total(&s);
    let rest = potential(&m, &State::new(&m));
    let mut worst = 0.0f64;
    for _ in 0..steps {
        let k = forward_kinematics(&m, &s);
        let t = DynamicsTerms::compute(&m, &s, &k, &[], h, &Pool::sequential()).unwrap();
        s = integrate(&m, &s, &t.v_free, h).unwrap();
        worst = worst.max((total(&s) - e0).abs());
    }
    // relative to the swing energy, not to an arbitrary potential datum
    worst / (e0 - rest)
}

/// Islands from `build_islands` equal the union-find components of the
/// touched bodies, and every row with a body lands in exactly one island.
pub fn partition_matches_oracle(g: &Graph) -> bool {
    let part = build_islands(&g.cs, &g.model);
    let mut ours: Vec<Vec<usize>> = part.islands.iter().map(|i| i.bodies.clone()).collect();
    ours.sort();
    let rows = g.cs.eq.len() + g.cs.ineq.len();
    let mut touched = vec![false; g.model.bodies.len()];
    for e in g.edges.iter().take(rows) {
        for &b in e {
            touched[b] = true;
        }
    }
    // the oracle also lists trees nothing touches; drop those
    let oracle: Vec<Vec<usize>> = components(g.model.bodies.len(), &g.edges)
        .into_iter()
        .filter(|c| c.iter().any(|&b| touched[b]))
        .collect();
    let placed: usize = part.islands.iter().map(|i| i.eq_rows.len() + i.ineq_rows.len()).sum();
    let empty = g.edges.iter().take(rows).filter(|e| e.is_empty()).count();
    ours == oracle && placed + empty == rows
}

/// Largest `|v⁺|` difference between per-island and one-system solves,
/// and the worst island residual.
pub fn island_vs_monolithic(g: &Graph) -> (f64, f64) {
    let tight = SolverOptions {
        max_iters: 1_000_000,
        tol: 1e-14,
        warm_start: false,
    };
    let store = ManifoldStore::default();
    let part = build_islands(&g.cs, &g.model);
    let all_e: Vec<usize> = part.islands.iter().flat_map(|i| i.eq_rows.clone()).collect();
    let all_n: Vec<usize> = part.islands.iter().flat_map(|i| i.ineq_rows.clone()).collect();
    let mono = solve_rows(&g.model, &g.cs, &g.terms, &store, &all_e, &all_n, &tight).unwrap();
    let mut v_mono = g.terms.v_free.clone();
    for (&d, &x) in mono.dofs.iter().zip(&mono.v_plus) {
        v_mono[d] = x;
    }
    let mut v_isl = g.terms.v_free.clone();
    let mut residual = 0.0f64;
    for isl in &part.islands {
        let s = solve_rows(&g.model, &g.cs, &g.terms, &store, &isl.eq_rows, &isl.ineq_rows, &tight).unwrap();
        residual = residual.max(s.residual);
        for (&d, &x) in s.dofs.iter().zip(&s.v_plus) {
            v_isl[d] = x;
        }
    }
    (max_diff(&v_mono, &v_isl), residual)
}

/// Bit patterns of `(q, v)` after every step of a single-env run.
pub fn trajectory_bits(xml: &str, steps: usize, workers: usize) -> Vec<u64> {
    let model = load_model(xml).unwrap();
    let pool = Pool::new(workers);
    let opts = SolverOptions::from_model(&model);
    let mut state = State::new(&model);
    let mut store = ManifoldStore::default();
    let mut bits = Vec::new();
    for _ in 0..steps {
        let out = solve_step(&model, &state, &store, &vec![0.0; model.nu()], model.opt.timestep, &opts, &pool).unwrap();
        state = out.state;
        store = out.manifolds;
        bits.extend(state.q.iter().chain(&state.v).map(|x| x.to_bits()));
    }
    bits
}

/// Free spheres, boxes and capsules scattered in a column, optionally over a floor.
pub fn pile(rng: &mut ChaCha8Rng, n: usize, floor: bool, gravity: bool) -> Model {
    let g = if gravity { "0 0 -9.81" } else { "0 0 0" };
    let mut x = format!(r#"<mujoco><option gravity="{g}" timestep="0.01"/><worldbody>"#);
    if floor {
        x.push_str(r#"<geom type="plane" size="5 5 0.1" friction="0.7"/>"#);
    }
    for i in 0..n {
        let geom = match rng.random_range(0..3) {
            0 => format!(r#"type="sphere" size="{}""#, rng.random_range(0.05..0.15)),
            1 => format!(
                r#"type="box" size="{} {} {}""#,
                rng.random_range(0.05..0.15),
                rng.random_range(0.05..0.15),
                rng.random_range(0.05..0.15)
            ),
            _ => format!(
                r#"type="capsule" size="{} {}""#,
                rng.random_range(0.04..0.1),
                rng.random_range(0.05..0.15)
            ),
        };
        let _ = write!(
            x,
            r#"<body pos="{} {} {}" euler="{} {} {}"><freejoint/><geom {geom} mass="{}" friction="{}"/></body>"#,
            rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
            0.2 + 0.35 * i as f64,
            rng.random_range(-180.0..180.0),
            rng.random_range(-180.0..180.0),
            rng.random_range(-180.0..180.0),
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..1.0),
        );
    }
    x.push_str("</worldbody></mujoco>");
    load_model(&x).unwrap()
}
