use avgcons_core::{
    first_failing_window, make_sequence, union_graph, validate_b_connectivity, GeneratorParams,
    Graph, GraphSequence, SequenceKind,
};
use proptest::prelude::*;

fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..12).prop_flat_map(|n| {
        proptest::collection::vec((1..=n, 1..=n), 0..30).prop_map(move |pairs| {
            Graph::new(n, pairs.into_iter().filter(|(i, j)| i != j)).unwrap()
        })
    })
}

fn arb_periodic() -> impl Strategy<Value = GraphSequence> {
    (2usize..8).prop_flat_map(|n| {
        proptest::collection::vec(
            proptest::collection::vec((1..=n, 1..=n), 0..4).prop_map(move |pairs| {
                Graph::new(n, pairs.into_iter().filter(|(i, j)| i != j)).unwrap()
            }),
            1..6,
        )
        .prop_map(|graphs| GraphSequence::periodic(graphs).unwrap())
    })
}

// brute-force connectivity by repeated edge relaxation
fn connected_by_closure(g: &Graph) -> bool {
    let mut label: Vec<usize> = (0..g.n()).collect();
    loop {
        let mut changed = false;
        for e in g.edges() {
            let (a, b) = e.endpoints();
            let m = label[a - 1].min(label[b - 1]);
            for k in [a - 1, b - 1] {
                if label[k] != m {
                    label[k] = m;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    label.iter().all(|&l| l == 0)
}

proptest! {
    #[test]
    fn neighbor_queries_are_symmetric(g in arb_graph()) {
        for i in 1..=g.n() {
            for j in g.neighbors(i).unwrap() {
                prop_assert!(g.neighbors(j).unwrap().contains(&i));
            }
            let list = g.neighbors(i).unwrap();
            prop_assert!(list.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn connectivity_matches_closure_oracle(g in arb_graph()) {
        prop_assert_eq!(g.is_connected(), connected_by_closure(&g));
    }

    #[test]
    fn union_is_monotone_in_the_window(seq in arb_periodic(), t0 in 0u64..10, a in 0u64..6, b in 0u64..6) {
        let small = union_graph(&seq, t0, t0 + a).unwrap();
        let large = union_graph(&seq, t0, t0 + a + b).unwrap();
        for e in small.edges() {
            let (i, j) = e.endpoints();
            prop_assert!(large.has_edge(i, j));
        }
    }

    #[test]
    fn union_matches_pairwise_fold(seq in arb_periodic(), t0 in 0u64..10, len in 0u64..12) {
        let mut acc = seq.graph_at(t0).into_owned();
        for s in t0 + 1..=t0 + len {
            acc = acc.union(&seq.graph_at(s)).unwrap();
        }
        prop_assert_eq!(union_graph(&seq, t0, t0 + len).unwrap(), acc);
    }

    #[test]
    fn longer_windows_stay_connected(seq in arb_periodic(), b in 1u64..5, extra in 0u64..5) {
        let horizon = 40;
        if validate_b_connectivity(&seq, b, horizon).unwrap() {
            prop_assert!(validate_b_connectivity(&seq, b + extra, horizon).unwrap());
        }
    }

    #[test]
    fn constant_sequences_reduce_to_connectivity(g in arb_graph(), b in 1u64..6) {
        let seq = GraphSequence::constant(g.clone());
        prop_assert_eq!(validate_b_connectivity(&seq, b, 30).unwrap(), g.is_connected());
    }
}

#[test]
fn alternating_edges_with_unit_window() {
    let seq = GraphSequence::periodic(vec![
        Graph::new(3, [(1, 2)]).unwrap(),
        Graph::new(3, [(2, 3)]).unwrap(),
    ])
    .unwrap();
    // windows [0,1], [1,2], ... each hold one even and one odd round
    for k in 0..10 {
        let u = union_graph(&seq, k, k + 1).unwrap();
        assert_eq!(u.edge_count(), 2);
    }
    assert!(validate_b_connectivity(&seq, 1, 10).unwrap());
}

#[test]
fn round_robin_window_enumeration() {
    let seq = make_sequence(SequenceKind::RoundRobinSingleEdge, 5, &GeneratorParams::default(), 0)
        .unwrap();
    // inclusive 5-round windows see all four line edges
    for k in 0..25 {
        assert_eq!(union_graph(&seq, 4 * k, 4 * k + 4).unwrap(), Graph::line(5).unwrap());
    }
    let fail = first_failing_window(&seq, 2, 100).unwrap().unwrap();
    assert_eq!((fail.k, fail.start, fail.end), (0, 0, 2));
    assert_eq!(union_graph(&seq, 0, 2).unwrap().edge_count(), 3);
    assert!(first_failing_window(&seq, 0, 10).is_err());
    assert!(first_failing_window(&seq, 20, 10).is_err());
}

#[test]
fn edgeless_fails_at_first_window() {
    let seq = make_sequence(SequenceKind::ConstantEdgeless, 4, &GeneratorParams::default(), 0).unwrap();
    let w = first_failing_window(&seq, 10, 100).unwrap().unwrap();
    assert_eq!(w.k, 0);
}

#[test]
fn generator_tags_round_trip() {
    for kind in [
        SequenceKind::ConstantLine,
        SequenceKind::ConstantRing,
        SequenceKind::ConstantComplete,
        SequenceKind::ConstantStar,
        SequenceKind::ConstantEdgeless,
        SequenceKind::PeriodicList,
        SequenceKind::RoundRobinSingleEdge,
        SequenceKind::SeededRandomSpanning,
    ] {
        assert_eq!(kind.tag().parse::<SequenceKind>().unwrap(), kind);
    }
}
