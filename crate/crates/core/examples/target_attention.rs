//! Final pair states: last window state versus attention over the window.
//!
//! cargo run --example target_attention

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagnet::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use tagnet::neural::{forward, Aggregation, AttentionMode, ModelConfig, ModelParams, Tape};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn main() -> tagnet::Result<()> {
    let graph = KnowledgeGraph::new(
        5,
        2,
        vec![
            Triple::new(0, 0, 1),
            Triple::new(1, 1, 2),
            Triple::new(0, 1, 2),
            Triple::new(2, 0, 3),
            Triple::new(3, 1, 1),
            Triple::new(3, 0, 4),
        ],
    )?
    .augment_reciprocal()?;

    for (attention, temperature) in [
        (AttentionMode::Fixed, 1.0),
        (AttentionMode::Specific, 1.0),
        (AttentionMode::Specific, 1e-3),
    ] {
        let config = ModelConfig {
            dim: 4,
            layers: 4,
            delta: 2,
            aggregation: Aggregation::Pna,
            attention,
            temperature,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(config, graph.relation_count(), &mut ChaCha8Rng::seed_from_u64(3))?;
        let mut tape = Tape::new(&params.data);
        let pass = forward(&mut tape, &graph, EntityId(0), RelationId(0), &params, Vec::new())?;
        println!("{attention:?}, temperature {temperature}:");
        for o in graph.entities() {
            let states = pass.hiddens[o.index()].len();
            let xf = pass.final_state(&mut tape, o, &params)?;
            let z = pass.logit(&mut tape, o, &params)?;
            println!(
                "  target {}: {} window states, |x^F| = {:.4}, logit {:+.4}",
                o.0,
                states,
                norm(tape.value(xf)),
                tape.value(z)[0]
            );
        }
    }
    Ok(())
}
