//! Train on a synthetic compositional graph (`r3 = r1 ∘ r2`) and rank the held-out facts.
//!
//! cargo run --release --example train_toy_model -- [fixed|specific] [epochs] [seed]

use std::time::Instant;

use tagnet::neural::{
    compositional_dataset, rank_filtered, train_toy, training_view, AttentionMode, SyntheticConfig, TrainConfig,
};

fn main() -> tagnet::Result<()> {
    let toy = TrainConfig::toy();
    let mut args = std::env::args().skip(1);
    let attention = match args.next().as_deref() {
        Some("specific") => AttentionMode::Specific,
        _ => AttentionMode::Fixed,
    };
    let epochs = args.next().and_then(|e| e.parse().ok()).unwrap_or(toy.epochs);
    let seed = args.next().and_then(|e| e.parse().ok()).unwrap_or(0);

    let ds = compositional_dataset(&SyntheticConfig::default())?;
    let (graph, known) = training_view(&ds)?;
    let r3: Vec<_> = ds.train.iter().filter(|t| t.relation.0 == 2).copied().collect();
    println!(
        "{} entities, {} propagation edges, {} train / {} test facts",
        graph.entity_count(),
        graph.edge_count(),
        ds.train.len(),
        ds.test.len()
    );

    let cfg = TrainConfig {
        attention,
        epochs,
        seed,
        ..toy
    };
    let start = Instant::now();
    let out = train_toy(&graph, &ds.train, &known, &cfg)?;
    for (e, l) in out.epoch_losses.iter().enumerate().step_by(10) {
        println!("epoch {e:>3}  loss {l:.4}");
    }
    println!("trained in {:.1?}", start.elapsed());

    let test = rank_filtered(&out.params, &graph, &ds.test, &known)?;
    let train = rank_filtered(&out.params, &graph, &r3, &known)?;
    println!("test  r3: MRR {:.3}  Hits@1 {:.3}  Hits@10 {:.3}", test.mrr, test.hits_at_1, test.hits_at_10);
    println!("train r3: MRR {:.3}  Hits@1 {:.3}  Hits@10 {:.3}", train.mrr, train.hits_at_1, train.hits_at_10);
    Ok(())
}
