//! Generalized Bellman-Ford over several semirings on one small graph.
//!
//! cargo run --example semiring_propagation

use tagnet::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use tagnet::semiring::{
    generalized_bellman_ford, CustomWeight, Katz, MinDist, PathCount, Semiring, WeightedReach,
};

fn show<S: Semiring>(graph: &KnowledgeGraph, semiring: &S, layers: usize) -> tagnet::Result<()> {
    let out = generalized_bellman_ford(graph, EntityId(0), RelationId(0), semiring, layers)?;
    println!("{}:", semiring.name());
    for l in &out {
        let row: Vec<String> = l.values.iter().map(|v| format!("{v:>8}")).collect();
        println!("  t={} {}", l.layer, row.join(" "));
    }
    Ok(())
}

fn main() -> tagnet::Result<()> {
    // 0 → 1 → 3, 0 → 2 → 3, a back edge 3 → 0 and a parallel edge 0 → 1
    let graph = KnowledgeGraph::new(
        4,
        2,
        vec![
            Triple::new(0, 0, 1),
            Triple::new(0, 1, 1),
            Triple::new(1, 0, 3),
            Triple::new(0, 1, 2),
            Triple::new(2, 1, 3),
            Triple::new(3, 0, 0),
        ],
    )?;
    let layers = 4;
    show(&graph, &PathCount, layers)?;
    show(&graph, &MinDist, layers)?;
    show(&graph, &Katz { beta: 0.2 }, layers)?;
    show(&graph, &WeightedReach::new(vec![0.9, 0.5], 1.0)?, layers)?;

    // edges matching the query relation count double
    let matching = CustomWeight {
        inner: Katz { beta: 0.2 },
        weight: |e: &Triple, q: RelationId| if e.relation == q { 0.4 } else { 0.2 },
    };
    show(&graph, &matching, layers)
}
