//! Message reduction and pruned-message composition over many sources.
//!
//! cargo run --release --example message_accounting -- [entities] [edges]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tagnet::kg::{EntityId, KnowledgeGraph, Triple};
use tagnet::truncated::{classify_pruned_messages, message_reduction_report, ConstraintContext, Window};

fn main() -> tagnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: u32 = args.next().and_then(|a| a.parse().ok()).unwrap_or(2000);
    let m: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4000);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let edges = (0..m)
        .map(|_| Triple::new(rng.gen_range(0..n), rng.gen_range(0..4), rng.gen_range(0..n)))
        .collect();
    let graph = KnowledgeGraph::new(n as usize, 4, edges)?.augment_reciprocal()?;
    let sources: Vec<EntityId> = (0..200).map(|_| EntityId(rng.gen_range(0..n))).collect();
    let layers = 6;

    println!("{n} entities, {} augmented edges, T={layers}, {} sources", graph.edge_count(), sources.len());
    println!("δ  reduction  with-degree  empty%  redundant%  max-updates");
    for delta in 0..=3 {
        let r = message_reduction_report(&graph, &sources, layers, Window::new(delta))?;
        println!(
            "{delta}  {:>8.2}%  {:>10.2}%  {:>6.1}  {:>10.1}  {:>11}",
            r.reduction_percent,
            r.reduction_percent_with_degree,
            r.composition.empty_percent(),
            r.composition.redundant_percent(),
            r.max_node_updates
        );
    }

    let ctx = ConstraintContext::new(&graph, sources[0], Window::new(1))?;
    let c = classify_pruned_messages(&ctx, layers);
    println!(
        "\nsource {}: {} empty, {} redundant, {} into unreachable nodes",
        sources[0].0, c.empty, c.redundant, c.never_schedulable
    );
    Ok(())
}
