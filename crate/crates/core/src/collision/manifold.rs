use std::collections::BTreeMap;

use super::ContactPoint;

/// Points closer than this (m) to a previous point of the same pair are
/// treated as the same contact.
pub const MATCH_DISTANCE: f64 = 5e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct ContactManifold {
    pub geom1: usize,
    pub geom2: usize,
    pub points: Vec<ContactPoint>,
    /// Cached `(normal, tangent1, tangent2)` impulses per point (N·s).
    pub lambda: Vec<[f64; 3]>,
    /// Index of the previous-frame point each point was matched to.
    pub matched: Vec<Option<usize>>,
    /// Frames this pair has been in contact.
    pub age: u32,
}

impl ContactManifold {
    pub fn new(geom1: usize, geom2: usize, points: Vec<ContactPoint>) -> Self {
        let n = points.len();
        ContactManifold {
            geom1,
            geom2,
            points,
            lambda: vec![[0.0; 3]; n],
            matched: vec![None; n],
            age: 0,
        }
    }
}

/// Manifolds keyed by geom pair.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ManifoldStore {
    pub manifolds: BTreeMap<(usize, usize), ContactManifold>,
}

impl ManifoldStore {
    pub fn len(&self) -> usize {
        self.manifolds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.manifolds.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.manifolds.values().map(|m| m.points.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ContactManifold> {
        self.manifolds.values()
    }

    pub fn clear(&mut self) {
        self.manifolds.clear();
    }
}

fn match_points(prev: &ContactManifold, fresh: &[ContactPoint]) -> Vec<Option<usize>> {
    let mut used = vec![false; prev.points.len()];
    let mut out = vec![None; fresh.len()];
    // exact feature matches first, then nearest within the radius
    for (i, p) in fresh.iter().enumerate() {
        let best = prev
            .points
            .iter()
            .enumerate()
            .filter(|(j, q)| !used[*j] && q.feature == p.feature)
            .min_by(|(_, a), (_, b)| (a.pos - p.pos).norm().total_cmp(&(b.pos - p.pos).norm()))
            .map(|(j, _)| j);
        if let Some(j) = best {
            used[j] = true;
            out[i] = Some(j);
        }
    }
    for (i, p) in fresh.iter().enumerate() {
        if out[i].is_some() {
            continue;
        }
        let best = prev
            .points
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, q)| (j, (q.pos - p.pos).norm()))
            .filter(|&(_, d)| d < MATCH_DISTANCE)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j);
        if let Some(j) = best {
            used[j] = true;
            out[i] = Some(j);
        }
    }
    out
}

/// Builds the next store: fresh points inherit cached impulses of the
/// previous points they match; pairs without fresh points are dropped.
pub fn update_manifolds(prev: &ManifoldStore, fresh: Vec<((usize, usize), Vec<ContactPoint>)>) -> ManifoldStore {
    let mut next = ManifoldStore::default();
    for (key, points) in fresh {
        if points.is_empty() {
            continue;
        }
        let mut m = ContactManifold::new(key.0, key.1, points);
        if let Some(old) = prev.manifolds.get(&key) {
            m.matched = match_points(old, &m.points);
            for (i, j) in m.matched.iter().enumerate() {
                if let Some(j) = j {
                    m.lambda[i] = old.lambda[*j];
                }
            }
            m.age = old.age + 1;
        }
        next.manifolds.insert(key, m);
    }
    next
}
