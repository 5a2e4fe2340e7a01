//! Analytic gradients against central finite differences, per parameter group.
//!
//! cargo run --release --example gradient_check -- [seeds]

use tagnet::neural::{gradient_check, random_instance};

fn main() -> tagnet::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let (graph, batch, params) = random_instance(seed)?;
        let c = &params.config;
        println!(
            "seed {seed}: {:?}/{:?} δ={} {} edges, {} params",
            c.aggregation,
            c.attention,
            c.delta,
            graph.edge_count(),
            params.len()
        );
        for e in gradient_check(&graph, &batch, &params, 1e-4)? {
            worst = worst.max(e.relative_error);
            println!(
                "  {:<12} |analytic| {:.3e}  |numeric| {:.3e}  rel {:.2e}",
                e.group, e.analytic_norm, e.numeric_norm, e.relative_error
            );
        }
    }
    println!("worst relative error {worst:.2e}");
    Ok(())
}
