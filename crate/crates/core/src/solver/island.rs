//! Constraint islands: connected components of trees linked by rows.
//!
//! Bodies in the same kinematic tree share dofs through the mass matrix,
//! so a tree is the smallest unit an island can hold. Static bodies never
//! join components.

use super::ConstraintSet;
use crate::model::Model;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Island {
    /// Movable bodies, ascending.
    pub bodies: Vec<usize>,
    pub trees: Vec<usize>,
    /// Dofs of all trees, ascending.
    pub dofs: Vec<usize>,
    pub eq_rows: Vec<usize>,
    pub ineq_rows: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IslandPartition {
    pub islands: Vec<Island>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so labels do not depend on union order
        if ra < rb {
            self.0[rb] = ra;
        } else {
            self.0[ra] = rb;
        }
    }
}

fn row_trees(model: &Model, j: &[(usize, f64)]) -> Vec<usize> {
    let mut t: Vec<usize> = j.iter().filter_map(|&(d, _)| model.bodies[model.dof_body[d]].tree).collect();
    t.sort_unstable();
    t.dedup();
    t
}

pub fn build_islands(cs: &ConstraintSet, model: &Model) -> IslandPartition {
    let nt = model.trees.len();
    let mut uf = UnionFind((0..nt).collect());
    let mut used = vec![false; nt];
    let all_rows = cs.eq.iter().chain(&cs.ineq);
    let row_tree_lists: Vec<Vec<usize>> = all_rows.map(|r| row_trees(model, &r.j)).collect();
    for trees in &row_tree_lists {
        for &t in trees {
            used[t] = true;
            uf.union(trees[0], t);
        }
    }
    let mut slot = vec![usize::MAX; nt];
    let mut islands: Vec<Island> = Vec::new();
    for t in 0..nt {
        if !used[t] {
            continue;
        }
        let root = uf.find(t);
        if slot[root] == usize::MAX {
            slot[root] = islands.len();
            islands.push(Island::default());
        }
        let isl = &mut islands[slot[root]];
        isl.trees.push(t);
        isl.bodies.extend(&model.trees[t].bodies);
        isl.dofs.extend(model.trees[t].dofs.clone());
    }
    let ne = cs.eq.len();
    for (i, trees) in row_tree_lists.iter().enumerate() {
        if let Some(&t) = trees.first() {
            let isl = &mut islands[slot[uf.find(t)]];
            if i < ne {
                isl.eq_rows.push(i);
            } else {
                isl.ineq_rows.push(i - ne);
            }
        }
    }
    for isl in &mut islands {
        isl.bodies.sort_unstable();
    }
    IslandPartition { islands }
}
