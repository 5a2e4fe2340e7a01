//! Randomized check that truncated propagation equals the windowed walk sum,
//! and that a shifted window is caught.
//!
//! cargo run --release --example verify_theorem -- [graphs]

use tagnet::oracle::{run_theorem_suite, SuiteConfig};
use tagnet::truncated::WindowRule;

fn main() -> tagnet::Result<()> {
    let graphs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(100);
    let cfg = SuiteConfig {
        graphs,
        ..SuiteConfig::default()
    };
    let r = run_theorem_suite(&cfg)?;
    println!(
        "{} graphs, {} sources: {} window, {} unconstrained, {} bound and {} layer checks",
        r.graphs_checked,
        r.sources_checked,
        r.window_comparisons,
        r.unconstrained_comparisons,
        r.bound_checks,
        r.layer_independence_checks
    );
    println!(
        "failures {}, max katz error {:.2e}, {} redraws, {} ms",
        r.failure_count, r.max_katz_error, r.graphs_redrawn, r.elapsed_ms
    );

    let broken = run_theorem_suite(&SuiteConfig {
        graphs: 20,
        rule: WindowRule::InjectedOffByOne,
        ..SuiteConfig::default()
    })?;
    println!("\nwith an off-by-one window: {} failures", broken.failure_count);
    if let Some(c) = broken.failures.first() {
        println!("first counterexample: {c}");
    }
    Ok(())
}
