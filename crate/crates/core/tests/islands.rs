mod common;

use common::*;
use playground_core::scenario::scenes;

#[test]
fn partition_matches_union_find() {
    let mut r = rng(11);
    for case in 0..100 {
        let g = random_graph(&mut r);
        assert!(partition_matches_oracle(&g), "case {case}");
    }
}

#[test]
fn island_solves_match_monolithic() {
    let mut r = rng(12);
    for case in 0..100 {
        let g = random_graph(&mut r);
        let (dv, residual) = island_vs_monolithic(&g);
        assert!(residual < 1e-12, "case {case}: residual {residual}");
        assert!(dv < 1e-10, "case {case}: |Δv⁺| = {dv}");
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    for xml in [scenes::stack(3, 3, 0.01), scenes::chains(4, 0.3, 0.01)] {
        let one = trajectory_bits(&xml, 150, 1);
        for w in [2, 8] {
            assert!(one == trajectory_bits(&xml, 150, w), "workers {w} diverged");
        }
    }
}
