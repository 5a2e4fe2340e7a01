use num_bigint::BigUint;
use proptest::prelude::*;
use tagnet::kg::{bfs_distances, EntityId, KnowledgeGraph, RelationId, Triple};
use tagnet::oracle::{eval_windowed_formulation, WalkEnumerator};
use tagnet::semiring::{generalized_bellman_ford, ExtNat, Katz, MinDist, PathCount};
use tagnet::truncated::{truncated_bellman_ford, TruncatedOptions};

fn graph_strategy() -> impl Strategy<Value = KnowledgeGraph> {
    (1u32..=7).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0u32..2, 0..n), 0..=16)
            .prop_map(move |es| {
                let edges = es.into_iter().map(|(s, r, o)| Triple::new(s, r, o)).collect();
                KnowledgeGraph::new(n as usize, 2, edges).unwrap()
            })
    })
}

/// Walk counts by length from `s`: `counts[t][o] = (A^t)[s][o]`.
fn matrix_powers(g: &KnowledgeGraph, s: usize, max_len: usize) -> Vec<Vec<u64>> {
    let n = g.entity_count();
    let mut a = vec![vec![0u64; n]; n];
    for e in g.edges() {
        a[e.subject.index()][e.object.index()] += 1;
    }
    let mut rows = vec![vec![0u64; n]];
    rows[0][s] = 1;
    for t in 1..=max_len {
        let prev = &rows[t - 1];
        let next = (0..n).map(|o| (0..n).map(|x| prev[x] * a[x][o]).sum()).collect();
        rows.push(next);
    }
    rows
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn truncated_path_count_is_a_window_of_matrix_powers(g in graph_strategy(), delta in 0u32..3, extra in 0usize..2) {
        for s in g.entities() {
            let dist = bfs_distances(&g, s).unwrap();
            let layers = (dist.max_finite() as usize + delta as usize + extra).max(1);
            let run = truncated_bellman_ford(&g, s, RelationId(0), &PathCount, TruncatedOptions::new(layers, delta)).unwrap();
            let powers = matrix_powers(&g, s.index(), layers);
            for o in g.entities() {
                let want: u64 = match dist.get(o) {
                    Some(d) => (d as usize..=d as usize + delta as usize).map(|t| powers[t][o.index()]).sum(),
                    None => 0,
                };
                prop_assert_eq!(&run.values[o.index()], &BigUint::from(want), "s={:?} o={:?}", s, o);
            }
        }
    }

    #[test]
    fn bellman_ford_layers_are_prefix_sums_of_matrix_powers(g in graph_strategy(), layers in 0usize..5) {
        let s = EntityId(0);
        let out = generalized_bellman_ford(&g, s, RelationId(0), &PathCount, layers).unwrap();
        let powers = matrix_powers(&g, 0, layers);
        for (t, layer) in out.iter().enumerate() {
            for o in g.entities() {
                let want: u64 = (0..=t).map(|k| powers[k][o.index()]).sum();
                prop_assert_eq!(&layer.values[o.index()], &BigUint::from(want));
            }
        }
    }

    #[test]
    fn min_dist_recovers_bfs_distance(g in graph_strategy(), delta in 0u32..3) {
        for s in g.entities() {
            let dist = bfs_distances(&g, s).unwrap();
            let layers = (dist.max_finite() as usize + delta as usize).max(1);
            let run = truncated_bellman_ford(&g, s, RelationId(0), &MinDist, TruncatedOptions::new(layers, delta)).unwrap();
            for o in g.entities() {
                let want = dist.get(o).map_or(ExtNat::Infinite, |d| ExtNat::Finite(d as u64));
                prop_assert_eq!(run.values[o.index()], want);
            }
        }
    }

    #[test]
    fn katz_matches_windowed_walk_sum(g in graph_strategy(), delta in 0u32..3, beta in 0.05f64..0.5) {
        let katz = Katz { beta };
        let enumerator = WalkEnumerator { length_cap: 12, walk_budget: 200_000 };
        let s = EntityId(0);
        let dist = bfs_distances(&g, s).unwrap();
        let layers = (dist.max_finite() as usize + delta as usize).max(1);
        let run = truncated_bellman_ford(&g, s, RelationId(1), &katz, TruncatedOptions::new(layers, delta)).unwrap();
        for o in g.entities().filter(|&o| dist.get(o).is_some()) {
            match enumerator.eval_windowed_formulation(&g, s, o, RelationId(1), &katz, delta as usize) {
                Ok(want) => prop_assert!((run.values[o.index()] - want).abs() <= 1e-9, "{} vs {}", run.values[o.index()], want),
                Err(tagnet::Error::ResourceLimit(_)) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn large_delta_matches_unconstrained(g in graph_strategy(), layers in 1usize..5) {
        for s in g.entities() {
            let base = generalized_bellman_ford(&g, s, RelationId(0), &PathCount, layers).unwrap();
            let run = truncated_bellman_ford(&g, s, RelationId(0), &PathCount, TruncatedOptions::new(layers, layers as u32)).unwrap();
            let dist = bfs_distances(&g, s).unwrap();
            for o in g.entities().filter(|&o| dist.get(o).is_some_and(|d| d as usize <= layers)) {
                prop_assert_eq!(&run.values[o.index()], &base[layers].values[o.index()]);
            }
        }
    }
}

#[test]
fn free_function_matches_enumerator_on_a_cycle() {
    let g = KnowledgeGraph::new(3, 1, vec![Triple::new(0, 0, 1), Triple::new(1, 0, 2), Triple::new(2, 0, 0)]).unwrap();
    let v = eval_windowed_formulation(&g, EntityId(0), EntityId(2), RelationId(0), &PathCount, 3).unwrap();
    // lengths 2..=5 from 0 to 2 on a 3-cycle: only length 2 and 5
    assert_eq!(v, BigUint::from(2u32));
}
