//! Rigid-link Gaussian kinematics: points bound to bodies once, then
//! moved with their bodies for a whole batch every step.
//!
//! Poses are gathered from a [`BatchPoses`] tensor laid out as
//! `B × nbody × (tx, ty, tz, qw, qx, qy, qz)`.

mod io;
mod ply;

pub use io::{read_template, write_template, MAGIC, VERSION};
pub use ply::{read_ply, PlyProperty, PlyType};

use crate::batch::BatchPoses;
use crate::dynamics::{forward_kinematics, State};
use crate::exec::Pool;
use crate::linalg::{Quat, Vec3};
use crate::model::Model;

#[derive(Debug, thiserror::Error)]
pub enum RlgkError {
    #[error("unknown body {0:?}")]
    UnknownBody(String),
    #[error("point {0} is not assigned to any body")]
    Unassigned(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("bad template data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Points in world coordinates at binding time, with an opaque
/// fixed-stride payload per point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vec3>,
    pub orientations: Vec<Quat>,
    pub stride: usize,
    pub payload: Vec<u8>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vec3>) -> Self {
        let n = positions.len();
        PointCloud {
            positions,
            orientations: vec![Quat::IDENTITY; n],
            stride: 0,
            payload: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Which body each point follows.
#[derive(Clone, Debug)]
pub enum Assignment {
    PerPoint(Vec<usize>),
    /// Named body and the indices of the points bound to it.
    Clusters(Vec<(String, Vec<usize>)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTemplate {
    pub p_local: Vec<Vec3>,
    pub q_local: Vec<Quat>,
    /// Body of each point.
    pub index_map: Vec<usize>,
    /// Names of the bound model's bodies, indexed by body id.
    pub body_names: Vec<String>,
    pub stride: usize,
    pub payload: Vec<u8>,
}

/// Read-only view of one template point, handed to filter predicates.
#[derive(Clone, Copy, Debug)]
pub struct PointRef<'a> {
    pub index: usize,
    pub p_local: Vec3,
    pub q_local: Quat,
    pub body: usize,
    pub payload: &'a [u8],
}

impl GaussianTemplate {
    pub fn len(&self) -> usize {
        self.p_local.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_local.is_empty()
    }

    pub fn nbody(&self) -> usize {
        self.body_names.len()
    }

    pub fn point(&self, i: usize) -> PointRef<'_> {
        PointRef {
            index: i,
            p_local: self.p_local[i],
            q_local: self.q_local[i],
            body: self.index_map[i],
            payload: &self.payload[i * self.stride..(i + 1) * self.stride],
        }
    }

    /// Re-targets a template (for example one read from disk) onto `model`
    /// by body name. Unnamed bodies match by id.
    pub fn retarget(&self, model: &Model) -> Result<GaussianTemplate, RlgkError> {
        let map: Vec<usize> = self
            .body_names
            .iter()
            .enumerate()
            .map(|(i, n)| {
                if n.is_empty() {
                    (i < model.nbody()).then_some(i)
                } else {
                    model.body_id(n)
                }
                .ok_or_else(|| RlgkError::UnknownBody(if n.is_empty() { format!("#{i}") } else { n.clone() }))
            })
            .collect::<Result<_, _>>()?;
        let mut out = self.clone();
        out.body_names = model.bodies.iter().map(|b| b.name.clone()).collect();
        for k in &mut out.index_map {
            *k = map[*k];
        }
        Ok(out)
    }

    fn check(&self) -> Result<(), RlgkError> {
        let m = self.len();
        if self.q_local.len() != m || self.index_map.len() != m || self.payload.len() != m * self.stride {
            return Err(RlgkError::Format("column lengths disagree".into()));
        }
        if let Some(&k) = self.index_map.iter().find(|&&k| k >= self.nbody()) {
            return Err(RlgkError::UnknownBody(format!("#{k}")));
        }
        Ok(())
    }
}

/// Binds `cloud` to the bodies of `model` at its default configuration.
pub fn bind_template(cloud: &PointCloud, model: &Model, assignment: &Assignment) -> Result<GaussianTemplate, RlgkError> {
    let kin = forward_kinematics(model, &State::new(model));
    let poses: Vec<(Vec3, Quat)> = kin.xform.iter().map(|x| (x.translation, x.rotation)).collect();
    bind_template_at(cloud, model, &poses, assignment)
}

/// Binds `cloud` against explicit per-body world poses.
pub fn bind_template_at(
    cloud: &PointCloud,
    model: &Model,
    poses: &[(Vec3, Quat)],
    assignment: &Assignment,
) -> Result<GaussianTemplate, RlgkError> {
    let m = cloud.len();
    if poses.len() != model.nbody() {
        return Err(RlgkError::ShapeMismatch {
            expected: format!("{} body poses", model.nbody()),
            got: poses.len().to_string(),
        });
    }
    if cloud.orientations.len() != m || cloud.payload.len() != m * cloud.stride {
        return Err(RlgkError::Format("point cloud column lengths disagree".into()));
    }
    let index_map = match assignment {
        Assignment::PerPoint(ks) => {
            if ks.len() != m {
                return Err(RlgkError::ShapeMismatch {
                    expected: format!("{m} assignments"),
                    got: ks.len().to_string(),
                });
            }
            if let Some(&k) = ks.iter().find(|&&k| k >= model.nbody()) {
                return Err(RlgkError::UnknownBody(format!("#{k}")));
            }
            ks.clone()
        }
        Assignment::Clusters(cs) => {
            let mut ks = vec![usize::MAX; m];
            for (name, idx) in cs {
                let b = model.body_id(name).ok_or_else(|| RlgkError::UnknownBody(name.clone()))?;
                for &i in idx {
                    if i >= m {
                        return Err(RlgkError::Format(format!("cluster {name:?} refers to point {i} of {m}")));
                    }
                    ks[i] = b;
                }
            }
            if let Some(i) = ks.iter().position(|&k| k == usize::MAX) {
                return Err(RlgkError::Unassigned(i));
            }
            ks
        }
    };
    let mut p_local = Vec::with_capacity(m);
    let mut q_local = Vec::with_capacity(m);
    for i in 0..m {
        let (t, q) = poses[index_map[i]];
        p_local.push(q.inverse_rotate(cloud.positions[i] - t));
        q_local.push(q.inverse().hamilton(cloud.orientations[i]).normalize());
    }
    Ok(GaussianTemplate {
        p_local,
        q_local,
        index_map,
        body_names: model.bodies.iter().map(|b| b.name.clone()).collect(),
        stride: cloud.stride,
        payload: cloud.payload.clone(),
    })
}

/// World positions `B × M × 3` and orientations `B × M × 4`
/// (`qw, qx, qy, qz`), env-major.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SyncOutput {
    pub b: usize,
    pub m: usize,
    pub positions: Vec<f64>,
    pub orientations: Vec<f64>,
}

impl SyncOutput {
    pub fn position(&self, env: usize, i: usize) -> Vec3 {
        let o = (env * self.m + i) * 3;
        Vec3::new(self.positions[o], self.positions[o + 1], self.positions[o + 2])
    }

    pub fn orientation(&self, env: usize, i: usize) -> Quat {
        let o = (env * self.m + i) * 4;
        Quat::from_array(self.orientations[o..o + 4].try_into().unwrap())
    }
}

/// Moves every template point of one env: `p = R(q_k) p_local + t_k`,
/// `q = q_k ⊗ q_local`. `env_poses` is one `nbody × 7` row.
pub fn sync_env(tmpl: &GaussianTemplate, env_poses: &[f64], positions: &mut [f64], orientations: &mut [f64]) {
    // gather once per body: rotation matrix, translation and quaternion
    let bodies: Vec<_> = env_poses
        .chunks_exact(7)
        .map(|d| {
            let q = Quat::new(d[3], d[4], d[5], d[6]);
            (q.to_mat3(), Vec3::new(d[0], d[1], d[2]), q)
        })
        .collect();
    for (i, &k) in tmpl.index_map.iter().enumerate() {
        let (r, t, q) = &bodies[k];
        let p = *r * tmpl.p_local[i] + *t;
        positions[i * 3..i * 3 + 3].copy_from_slice(&p.to_array());
        orientations[i * 4..i * 4 + 4].copy_from_slice(&q.hamilton(tmpl.q_local[i]).to_array());
    }
}

/// Synchronizes the template for every env of the batch; envs run
/// concurrently on `pool`.
pub fn sync_batch(tmpl: &GaussianTemplate, poses: &BatchPoses, pool: &Pool) -> Result<SyncOutput, RlgkError> {
    tmpl.check()?;
    if poses.nbody != tmpl.nbody() || poses.data.len() != poses.b * poses.nbody * 7 {
        return Err(RlgkError::ShapeMismatch {
            expected: format!("B × {} × 7 poses", tmpl.nbody()),
            got: format!("{} × {} with {} values", poses.b, poses.nbody, poses.data.len()),
        });
    }
    let (b, m) = (poses.b, tmpl.len());
    let mut out = SyncOutput {
        b,
        m,
        positions: vec![0.0; b * m * 3],
        orientations: vec![0.0; b * m * 4],
    };
    if m == 0 {
        return Ok(out);
    }
    let mut rows: Vec<(&mut [f64], &mut [f64])> = out.positions.chunks_mut(m * 3).zip(out.orientations.chunks_mut(m * 4)).collect();
    pool.for_each_mut(&mut rows, |j, (p, q)| sync_env(tmpl, poses.env(j), p, q));
    Ok(out)
}

/// Keeps the points for which `keep` returns true, in order.
pub fn filter_template<F>(tmpl: &GaussianTemplate, mut keep: F) -> GaussianTemplate
where
    F: FnMut(PointRef<'_>) -> bool,
{
    let mut out = GaussianTemplate {
        p_local: Vec::new(),
        q_local: Vec::new(),
        index_map: Vec::new(),
        body_names: tmpl.body_names.clone(),
        stride: tmpl.stride,
        payload: Vec::new(),
    };
    for i in 0..tmpl.len() {
        let p = tmpl.point(i);
        if keep(p) {
            out.p_local.push(p.p_local);
            out.q_local.push(p.q_local);
            out.index_map.push(p.body);
            out.payload.extend_from_slice(p.payload);
        }
    }
    out
}
