use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use selfnest::approx::{approximate_linear, approximate_tree, average_to_linear_traced};
use selfnest::bottomup::{eval_dag, eval_tree, Registry, VertexCount};
use selfnest::combinatorics::{count_self_nested_eq, count_unordered_le, self_nested_frequency};
use selfnest::editdist::{
    brute_force_distance, edit_distance, edit_distance_dag, root_assignment_network,
};
use selfnest::flow::{assignment_oracle, check_certificate, min_cost_max_flow, FlowNetwork};
use selfnest::predictor::make_features;
use selfnest::reduction::{
    expand, expand_linear, from_linear, height_profile, is_linear, is_self_nested_naive,
    is_self_nested_profile, linear_size, multiplicities, random_linear_dag_direct, reduce,
    to_linear, LinearDag,
};
use selfnest::trees::random_tree;
use selfnest::{DagReduction, Tree};

fn tree(max: usize) -> impl Strategy<Value = Tree> {
    (1..=max, any::<u64>()).prop_map(|(n, seed)| random_tree(n, seed).unwrap())
}

fn linear(max_h: usize, max_d: u64) -> impl Strategy<Value = LinearDag> {
    (0..=max_h, 1..=max_d, any::<u64>())
        .prop_map(|(h, d, seed)| random_linear_dag_direct(h, d, seed).unwrap())
}

/// Random trees mixed with expanded random linear DAGs, so both outcomes of
/// the self-nestedness checks show up.
fn mixed_tree() -> impl Strategy<Value = Tree> {
    prop_oneof![tree(60), linear(4, 3).prop_map(|l| expand_linear(&l))]
}

fn shuffled(t: &Tree, seed: u64) -> Tree {
    t.shuffled(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn occurrence_counts(t: &Tree) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for k in t.vertex_keys() {
        *counts.entry(k).or_insert(0) += 1;
    }
    counts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn canonical_key_round_trips(t in tree(80)) {
        let back = Tree::parse(&t.canonical_key()).unwrap();
        prop_assert!(back.is_isomorphic(&t));
        prop_assert_eq!(back.canonical_key(), t.canonical_key());
    }

    #[test]
    fn canonical_key_ignores_child_order(t in tree(80), seed in any::<u64>()) {
        prop_assert_eq!(shuffled(&t, seed).canonical_key(), t.canonical_key());
    }

    #[test]
    fn display_parse_round_trip(t in tree(80)) {
        let back = Tree::parse(&t.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), t.to_string());
    }

    #[test]
    fn size_height_outdegree_recursions(t in tree(80)) {
        let forest = t.child_forest();
        prop_assert_eq!(t.size(), 1 + forest.iter().map(Tree::size).sum::<usize>());
        let h = forest.iter().map(|c| c.height() + 1).max().unwrap_or(0);
        prop_assert_eq!(t.height(), h);
        let deg = forest.iter().map(Tree::outdegree).chain([forest.len()]).max().unwrap();
        prop_assert_eq!(t.outdegree(), deg);
    }

    #[test]
    fn random_tree_has_requested_size(n in 1usize..=10_000, seed in any::<u64>()) {
        prop_assert_eq!(random_tree(n, seed).unwrap().size(), n);
    }

    #[test]
    fn self_nested_checks_agree(t in mixed_tree()) {
        let d = reduce(&t);
        prop_assert_eq!(is_linear(&d), is_self_nested_profile(&d));
        prop_assert_eq!(is_linear(&d), is_self_nested_naive(&t));
    }

    #[test]
    fn reduction_has_at_least_one_class_per_height(t in mixed_tree()) {
        let d = reduce(&t);
        prop_assert!(d.vertex_count() > t.height());
        prop_assert_eq!(d.vertex_count() == t.height() + 1, is_self_nested_naive(&t));
    }

    #[test]
    fn expand_inverts_reduce(t in tree(120)) {
        let d = reduce(&t);
        prop_assert!(expand(&d, d.root().unwrap()).unwrap().is_isomorphic(&t));
    }

    #[test]
    fn dag_text_round_trip(t in tree(120)) {
        let d = reduce(&t);
        prop_assert_eq!(DagReduction::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn linear_dags_survive_expansion(l in linear(5, 4)) {
        let d = reduce(&expand_linear(&l));
        prop_assert!(is_linear(&d));
        prop_assert_eq!(to_linear(&d).unwrap(), l.clone());
        prop_assert_eq!(from_linear(&l), d);
    }

    #[test]
    fn multiplicities_count_occurrences(t in tree(120)) {
        let d = reduce(&t);
        let mu = multiplicities(&d).unwrap();
        let counts = occurrence_counts(&t);
        let mut total = 0;
        for (v, m) in mu.iter() {
            let key = expand(&d, v).unwrap().canonical_key();
            prop_assert_eq!(counts[&key], m);
            total += m;
        }
        prop_assert_eq!(total as usize, t.size());
        prop_assert_eq!(mu.get(d.root().unwrap()), Some(1));
    }

    #[test]
    fn height_profile_rows_sum_to_root_degree(t in tree(120)) {
        let d = reduce(&t);
        let nu = height_profile(&d);
        for v in d.vertices() {
            let row = nu.row(v);
            let sub = expand(&d, v).unwrap();
            prop_assert_eq!(row.iter().sum::<u64>() as usize, sub.children(sub.root()).len());
            if v.height > 0 {
                prop_assert!(row[v.height - 1] >= 1);
            }
        }
    }

    #[test]
    fn bottom_up_on_dag_matches_tree(t in tree(150), seed in any::<u64>()) {
        let d = reduce(&t);
        let s = shuffled(&t, seed);
        for f in Registry::with_builtins().iter() {
            let v = eval_tree(f, &t);
            prop_assert_eq!(eval_dag(f, &d).unwrap(), v, "{}", f.name());
            prop_assert_eq!(eval_tree(f, &s), v, "{}", f.name());
        }
    }

    #[test]
    fn combiners_are_permutation_invariant(
        args in prop::collection::vec((0u64..6, 1u64..4), 1..8),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut perm = args.clone();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for f in Registry::with_builtins().iter() {
            prop_assert_eq!(f.combine(&args), f.combine(&perm), "{}", f.name());
        }
    }

    #[test]
    fn linear_size_is_vertex_count(l in linear(6, 4)) {
        let n = linear_size(&l);
        prop_assert_eq!(eval_dag(&VertexCount, &from_linear(&l)).unwrap(), n);
        prop_assert_eq!(expand_linear(&l).size() as u64, n);
    }
}

fn network() -> impl Strategy<Value = FlowNetwork> {
    (3usize..7).prop_flat_map(|nodes| {
        let arc = (0..nodes, 0..nodes, 0i64..4, 0i64..6);
        prop::collection::vec(arc, 0..14).prop_map(move |arcs| {
            let mut net = FlowNetwork::new(nodes, 0, nodes - 1);
            for (from, to, cap, cost) in arcs {
                if from != to && to != 0 && from != nodes - 1 {
                    net.add_arc(from, to, cap, cost);
                }
            }
            net
        })
    })
}

/// Bipartite instance with at most 4 left nodes, unit source arcs.
fn bipartite() -> impl Strategy<Value = FlowNetwork> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(l, r)| {
        prop::collection::vec((0i64..2, 0i64..9), l * r).prop_map(move |cells| {
            let (s, t) = (0, 1 + l + r);
            let mut net = FlowNetwork::new(l + r + 2, s, t);
            for i in 0..l {
                net.add_arc(s, 1 + i, 1, 0);
            }
            for j in 0..r {
                net.add_arc(1 + l + j, t, 1, 0);
            }
            for (k, (cap, cost)) in cells.iter().enumerate() {
                net.add_arc(1 + k / r, 1 + l + k % r, *cap, *cost);
            }
            net
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_matches_oracle(net in prop_oneof![network(), bipartite()]) {
        let res = min_cost_max_flow(&net).unwrap();
        prop_assert_eq!(check_certificate(&net, &res), Ok(()));
        if let Ok(cost) = assignment_oracle(&net) {
            prop_assert_eq!(res.cost, cost);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn distance_methods_agree(a in tree(12), b in tree(12)) {
        prop_assume!(a.outdegree() <= 6 && b.outdegree() <= 6);
        let d = edit_distance(&a, &b);
        prop_assert_eq!(brute_force_distance(&a, &b).unwrap(), d);
        prop_assert_eq!(edit_distance_dag(&reduce(&a), &reduce(&b)).unwrap(), d);
    }

    #[test]
    fn distance_size_bounds(a in tree(50), b in tree(50)) {
        let d = edit_distance(&a, &b) as i64;
        let (sa, sb) = (a.size() as i64, b.size() as i64);
        prop_assert!((sa - sb).abs() <= d);
        prop_assert!(d + 2 <= sa + sb);
        prop_assert_eq!(edit_distance(&a, None) as i64, sa);
    }

    #[test]
    fn distance_is_a_metric(a in tree(25), b in tree(25), c in tree(25), seed in any::<u64>()) {
        let ab = edit_distance(&a, &b);
        prop_assert_eq!(ab == 0, a.is_isomorphic(&b));
        prop_assert_eq!(ab, edit_distance(&b, &a));
        prop_assert!(edit_distance(&a, &c) <= ab + edit_distance(&b, &c));
        prop_assert_eq!(edit_distance(&a, &shuffled(&a, seed)), 0);
    }

    #[test]
    fn flow_step_is_optimal(a in tree(20), b in tree(20)) {
        if let Some(net) = root_assignment_network(&a, &b) {
            let res = min_cost_max_flow(&net).unwrap();
            prop_assert_eq!(res.cost as u64, edit_distance(&a, &b));
            if let Ok(cost) = assignment_oracle(&net) {
                prop_assert_eq!(res.cost, cost);
            }
        }
    }

    #[test]
    fn averaging_output_is_self_nested(t in tree(150)) {
        let out = approximate_tree(&t);
        prop_assert!(is_self_nested_naive(&out));
        prop_assert_eq!(out.height(), t.height());
        let d = edit_distance(&t, &out) as usize;
        prop_assert!(d + 2 <= t.size() + out.size() || t.size() == 1);
    }

    #[test]
    fn averaging_is_idempotent(l in linear(5, 4)) {
        let t = expand_linear(&l);
        prop_assert_eq!(approximate_linear(&t), l);
        prop_assert!(approximate_tree(&t).is_isomorphic(&t));
    }

    #[test]
    fn averaging_is_a_single_pass(t in tree(200)) {
        let d = reduce(&t);
        let (_, trace) = average_to_linear_traced(&d).unwrap();
        prop_assert_eq!(trace.averaging_edge_visits, d.edge_count());
        prop_assert!(trace.total() <= 3 * d.edge_count().max(1));
    }

    #[test]
    fn features_depend_only_on_isomorphism_class(a in tree(40), b in tree(40), s in any::<u64>()) {
        prop_assert_eq!(make_features(&a, &b), make_features(&shuffled(&a, s), &shuffled(&b, s ^ 1)));
    }
}

fn enumerate_linear(height: usize, degree: u64) -> u64 {
    fn rows(len: usize, budget: u64, last_positive: bool) -> u64 {
        // Number of rows of `len` labels with sum ≤ budget whose last label
        // is at least 1 when required.
        fn go(i: usize, len: usize, left: u64, last_positive: bool) -> u64 {
            if i == len {
                return 1;
            }
            let lo = if i + 1 == len && last_positive { 1 } else { 0 };
            (lo..=left).map(|v| go(i + 1, len, left - v, last_positive)).sum()
        }
        go(0, len, budget, last_positive)
    }
    (1..=height).map(|h| rows(h, degree, true)).product()
}

#[test]
fn self_nested_count_matches_enumeration() {
    for h in 1..=4 {
        for d in 1..=4 {
            assert_eq!(
                count_self_nested_eq(h as u64, d),
                enumerate_linear(h, d).into(),
                "H={h} d={d}"
            );
        }
    }
}

#[test]
fn unordered_count_single_level() {
    for d in 1..=20u64 {
        assert_eq!(count_unordered_le(1, d), d.into());
    }
}

#[test]
fn frequencies_decrease_with_height() {
    for d in 2..=4 {
        let mut prev = 1.0;
        for h in 1..=5 {
            let c = self_nested_frequency(h, d);
            assert!(c.numerator <= c.denominator);
            assert!(c.value <= 1.0);
            if h >= 2 {
                assert!(c.value < prev, "H={h} d={d}");
            }
            prev = c.value;
        }
    }
}
