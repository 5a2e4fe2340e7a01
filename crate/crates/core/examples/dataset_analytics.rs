//! Split statistics, mean degree and the test distance histogram of a dataset.
//!
//! cargo run --release --example dataset_analytics -- path/to/WN18RR
//!
//! Without an argument a small synthetic split is used.

use tagnet::kg::{distance_distribution, AnalyticsReport, SplitDataset, HISTOGRAM_LABELS};
use tagnet::neural::{compositional_dataset, SyntheticConfig};

fn main() -> tagnet::Result<()> {
    let ds = match std::env::args().nth(1) {
        Some(dir) => SplitDataset::load(dir)?,
        None => compositional_dataset(&SyntheticConfig::default())?,
    };
    println!(
        "{}: {} entities, {} relations, {}/{}/{} train/valid/test",
        ds.name,
        ds.graph.entity_count(),
        ds.graph.relation_count(),
        ds.train.len(),
        ds.valid.len(),
        ds.test.len()
    );

    let graph = ds.graph.augment_reciprocal()?;
    let hist = distance_distribution(&graph, &ds.test)?;
    let report = AnalyticsReport::new(&ds.name, &ds.graph, &hist)?;
    println!("mean degree {:.1}", report.mean_degree);
    for label in HISTOGRAM_LABELS {
        println!("  distance {label:>11}: {:5.1}%  ({})", hist.percent(label), hist.count(label));
    }
    println!("\n{}", report.to_tsv());
    Ok(())
}
