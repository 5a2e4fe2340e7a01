//! Intersecting the window constraint with an external edge mask.
//!
//! cargo run --example edge_mask

use tagnet::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use tagnet::semiring::PathCount;
use tagnet::truncated::{truncated_bellman_ford, Admitted, FnMask, MaskTable, TruncatedOptions};

fn main() -> tagnet::Result<()> {
    // two routes from 0 to 3: via 1 (relation 0) and via 2 (relation 1)
    let graph = KnowledgeGraph::new(
        4,
        2,
        vec![Triple::new(0, 0, 1), Triple::new(1, 0, 3), Triple::new(0, 1, 2), Triple::new(2, 1, 3)],
    )?;
    let (s, q) = (EntityId(0), RelationId(0));
    let opts = TruncatedOptions::new(3, 1);

    let plain = truncated_bellman_ford(&graph, s, q, &PathCount, opts)?;
    println!("no mask:       {:?}", plain.values.iter().map(|v| v.to_string()).collect::<Vec<_>>());

    // admit only relation-0 edges, everywhere
    let by_relation = FnMask(|_, o: EntityId, _| {
        Admitted::Only(graph.incoming(o).iter().copied().filter(|&i| graph.edge(i).relation.0 == 0).collect())
    });
    let run = truncated_bellman_ford(&graph, s, q, &PathCount, opts.with_mask(&by_relation))?;
    println!("relation 0:    {:?}", run.values.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    println!("  rejected by mask: {}", run.trace.totals.pruned_other);

    // a mask table: at layer 2 node 3 may only use edge 3 (2 → 3)
    let table = MaskTable::parse("# source\ttarget\tlayer\tedge\n0\t3\t2\t3\n")?;
    let run = truncated_bellman_ford(&graph, s, q, &PathCount, opts.with_mask(&table))?;
    println!("mask table:    {:?}", run.values.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    println!("  rejected by mask: {}", run.trace.totals.pruned_other);
    Ok(())
}
