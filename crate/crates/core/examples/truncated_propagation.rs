//! Truncated propagation: per-node windows, values and the message trace.
//!
//! cargo run --example truncated_propagation -- [delta] [layers]

use tagnet::kg::{bfs_distances, EntityId, KnowledgeGraph, RelationId, Triple};
use tagnet::semiring::{generalized_bellman_ford, PathCount};
use tagnet::truncated::{truncated_bellman_ford, TruncatedOptions};

fn main() -> tagnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let delta: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);
    let layers: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(6);

    // a ladder with a shortcut and a cycle
    let edges = [(0, 1), (1, 2), (2, 3), (0, 2), (3, 1), (3, 4), (4, 5), (5, 3)];
    let graph = KnowledgeGraph::new(6, 1, edges.iter().map(|&(s, o)| Triple::new(s, 0, o)).collect())?;
    let source = EntityId(0);

    let dist = bfs_distances(&graph, source)?;
    let run = truncated_bellman_ford(
        &graph,
        source,
        RelationId(0),
        &PathCount,
        TruncatedOptions::new(layers, delta).with_degree_messages(true),
    )?;
    let full = generalized_bellman_ford(&graph, source, RelationId(0), &PathCount, layers)?;

    println!("δ={delta}, T={layers}");
    println!("node  dist  window   truncated  full");
    for o in graph.entities() {
        let window = match dist.get(o) {
            Some(d) => format!("[{d},{}]", d + delta),
            None => "-".into(),
        };
        println!(
            "{:>4}  {:>4}  {:<7}  {:>9}  {:>4}",
            o.0,
            dist.get(o).map_or("inf".into(), |d| d.to_string()),
            window,
            run.values[o.index()],
            full[layers].values[o.index()]
        );
    }

    println!("\nlayer  updates  aggregated  degree  empty  redundant");
    for (t, c) in run.trace.layers.iter().enumerate() {
        println!(
            "{:>5}  {:>7}  {:>10}  {:>6}  {:>5}  {:>9}",
            t + 1,
            c.node_updates,
            c.edge_aggregations,
            c.degree_message_units,
            c.pruned_empty,
            c.pruned_redundant
        );
    }
    let tr = &run.trace;
    println!(
        "aggregated {} of {} ({:.1}% fewer); max node updates {}, max edge aggregations {}",
        tr.totals.edge_aggregations,
        tr.baseline,
        tr.reduction_percent(false),
        tr.max_node_updates(),
        tr.max_edge_aggregations()
    );
    tr.check_update_bound(delta)
}
