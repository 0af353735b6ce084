mod common;

use groupgraph::gos::{check_gos_covering, connected_lift, deck_group, fiber_product, lift_gos, quotient_gos, GosMap};
use groupgraph::graph::{is_covering, GraphMorphism, SerreGraph};
use groupgraph::leighton::{
    assemble_hat_ball, brute_force_common_cover, common_cover_graphs, refinement_preserved, verify_common_cover,
    LeightonError,
};
use groupgraph::perm::Perm;
use groupgraph::voltage::{connected_part, voltage_cover, Voltages};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::*;

/// Cyclic voltages on the first loop of the wedge, so the lift is regular.
fn cyclic_lift(k: usize) -> groupgraph::gos::GosMorphism {
    let y = rigid_wedge();
    let first = y.base().edge_reps()[0];
    let shift = Perm::from_cycles(k, &[(0..k).collect()]).unwrap();
    let volt = Voltages::from_edges(y.base(), k, |e| if e == first { shift.clone() } else { Perm::identity(k) });
    connected_lift(&lift_gos(&y, &volt))
}

#[test]
fn total_space_counts() {
    let y = rigid_wedge();
    let t = y.total_space();
    let expected: usize = y.vertex_spaces().iter().chain(y.edge_spaces()).map(SerreGraph::num_vertices).sum();
    assert_eq!(t.graph.num_vertices(), expected);
    let lifted = cyclic_lift(3).source;
    let expected: usize = lifted.vertex_spaces().iter().chain(lifted.edge_spaces()).map(SerreGraph::num_vertices).sum();
    assert_eq!(lifted.total_space().graph.num_vertices(), expected);
}

#[test]
fn quotients_by_deck_groups_are_regular() {
    for k in 2..=4 {
        let f = cyclic_lift(k);
        let deck = deck_group(&f).unwrap();
        assert_eq!(deck.elements.len(), k);
        assert!(deck.regular);

        let id = GosMap::identity(&f.source);
        let gens: Vec<GosMap> = deck.elements.into_iter().filter(|m| *m != id).collect();
        let q = quotient_gos(&f.source, &gens).unwrap();
        let report = check_gos_covering(&q);
        assert!(report.is_covering);
        assert_eq!(report.degree, Some(k));
        let deck = deck_group(&q).unwrap();
        assert_eq!(deck.elements.len(), k);
        assert!(deck.regular);
    }
}

#[test]
fn gos_coverings_cover_on_total_spaces() {
    let y = rigid_wedge();
    let mut rng = StdRng::seed_from_u64(11);
    for k in 1..=4 {
        let f = lift_gos(&y, &Voltages::random(y.base(), k, &mut rng));
        assert!(check_gos_covering(&f).is_covering);
        let total = is_covering(&f.total_map());
        assert!(total.is_covering);
        assert_eq!(total.degree, Some(k));
    }
}

fn arbitrary_map<R: Rng>(base: &SerreGraph, rng: &mut R) -> GraphMorphism {
    let v = rng.gen_range(0..base.num_vertices());
    match rng.gen_range(0..4) {
        0 => vertex_inclusion(base, v),
        1 => walk(base, v, rng.gen_range(0..6), rng),
        2 => closed_walk(base, v, rng.gen_range(1..5), rng),
        _ => connected_part(&voltage_cover(base, &Voltages::random(base, rng.gen_range(1..4), rng))),
    }
}

#[test]
fn pullbacks_of_coverings_are_coverings() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..100 {
        let base = random_base(&mut rng, 5);
        let f1 = arbitrary_map(&base, &mut rng);
        let k = rng.gen_range(1..=3);
        let f2 = voltage_cover(&base, &Voltages::random(&base, k, &mut rng));
        for c in fiber_product(&f1, &f2).unwrap() {
            assert!(is_covering(&c.first).is_covering);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn coverings_preserve_refinement(seed in any::<u64>(), k in 1usize..4) {
        let mut rng = StdRng::seed_from_u64(seed);
        let base = random_base(&mut rng, 6);
        let f = connected_part(&voltage_cover(&base, &Voltages::random(&base, k, &mut rng)));
        prop_assert!(refinement_preserved(&f, None, None).unwrap());
    }

    #[test]
    fn constructed_covers_are_multiples_of_the_minimum(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let base = random_base(&mut rng, 3);
        let a = connected_part(&voltage_cover(&base, &Voltages::random(&base, rng.gen_range(1..3), &mut rng)));
        let b = connected_part(&voltage_cover(&base, &Voltages::random(&base, rng.gen_range(1..3), &mut rng)));
        let cc = common_cover_graphs(&a.source, &b.source, None, None).unwrap();
        prop_assert!(verify_common_cover(&cc, None, None));
        match brute_force_common_cover(&a.source, &b.source, 3) {
            Ok(Some(min)) => prop_assert_eq!(cc.order() % min.order(), 0),
            Ok(None) | Err(LeightonError::SearchBoundExceeded(_)) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

#[test]
fn hat_balls_satisfy_the_covering_criterion() {
    for (name, data) in hat_catalog() {
        for r in 0..=2 {
            let ball = assemble_hat_ball(&data, r).unwrap();
            assert!(ball.passed(), "{name} at radius {r}");
            assert!(ball.depth.iter().all(|&d| d <= r));
        }
    }
}
