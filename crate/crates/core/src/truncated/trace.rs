use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LayerCounters {
    pub node_updates: u64,
    pub edge_aggregations: u64,
    /// One unit per node update when degree messages are enabled.
    pub degree_message_units: u64,
    /// `Σ ρ_o`: how many pseudo-messages those units stand for.
    pub degree_messages_represented: u64,
    pub pruned_empty: u64,
    pub pruned_redundant: u64,
    /// In the window but rejected by the edge mask.
    pub pruned_other: u64,
    /// Edges into nodes the source cannot reach.
    pub never_schedulable: u64,
}

impl LayerCounters {
    pub fn add(&mut self, o: &LayerCounters) {
        self.node_updates += o.node_updates;
        self.edge_aggregations += o.edge_aggregations;
        self.degree_message_units += o.degree_message_units;
        self.degree_messages_represented += o.degree_messages_represented;
        self.pruned_empty += o.pruned_empty;
        self.pruned_redundant += o.pruned_redundant;
        self.pruned_other += o.pruned_other;
        self.never_schedulable += o.never_schedulable;
    }

    pub fn pruned(&self) -> u64 {
        self.pruned_empty + self.pruned_redundant + self.pruned_other + self.never_schedulable
    }

    /// Messages this run actually computes: edge aggregations plus degree units.
    pub fn messages(&self) -> u64 {
        self.edge_aggregations + self.degree_message_units
    }
}

/// Message accounting for one propagation run (or a merge of many).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PropagationTrace {
    pub layers: Vec<LayerCounters>,
    pub totals: LayerCounters,
    /// `T · |E|`: what unpruned propagation would aggregate.
    pub baseline: u64,
    pub runs: u64,
    #[serde(skip)]
    pub node_update_counts: Vec<u32>,
    #[serde(skip)]
    pub edge_aggregation_counts: Vec<u32>,
}

impl PropagationTrace {
    pub(crate) fn new(layers: usize, nodes: usize, edges: usize, baseline: u64) -> Self {
        PropagationTrace {
            layers: vec![LayerCounters::default(); layers],
            totals: LayerCounters::default(),
            baseline,
            runs: 1,
            node_update_counts: vec![0; nodes],
            edge_aggregation_counts: vec![0; edges],
        }
    }

    pub(crate) fn finish(&mut self) {
        let mut totals = LayerCounters::default();
        for l in &self.layers {
            totals.add(l);
        }
        self.totals = totals;
    }

    /// Sums counters of runs over the same graph and layer count. Per-item
    /// counts are summed too, so bounds only apply to single runs.
    pub fn merge(&mut self, other: &PropagationTrace) {
        if self.layers.len() < other.layers.len() {
            self.layers.resize(other.layers.len(), LayerCounters::default());
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.add(b);
        }
        self.totals.add(&other.totals);
        self.baseline += other.baseline;
        self.runs += other.runs;
        merge_counts(&mut self.node_update_counts, &other.node_update_counts);
        merge_counts(&mut self.edge_aggregation_counts, &other.edge_aggregation_counts);
    }

    pub fn max_node_updates(&self) -> u32 {
        self.node_update_counts.iter().copied().max().unwrap_or(0)
    }

    pub fn max_edge_aggregations(&self) -> u32 {
        self.edge_aggregation_counts.iter().copied().max().unwrap_or(0)
    }

    /// Every node updates and every edge is aggregated at most `δ+1` times.
    pub fn check_update_bound(&self, delta: u32) -> Result<()> {
        let bound = delta + 1;
        if self.runs != 1 {
            return Err(Error::Precondition("update bound applies to single runs".into()));
        }
        if let Some((i, &c)) = self.node_update_counts.iter().enumerate().find(|(_, &c)| c > bound) {
            return Err(Error::Invariant(format!("node {i} updated {c} times (> {bound})")));
        }
        if let Some((i, &c)) = self.edge_aggregation_counts.iter().enumerate().find(|(_, &c)| c > bound) {
            return Err(Error::Invariant(format!("edge {i} aggregated {c} times (> {bound})")));
        }
        Ok(())
    }

    /// `aggregated + pruned + never-schedulable = baseline`.
    pub fn accounting_balances(&self) -> bool {
        self.totals.edge_aggregations + self.totals.pruned() == self.baseline
    }

    /// `100 · (1 − messages / baseline)`.
    pub fn reduction_percent(&self, with_degree_messages: bool) -> f64 {
        if self.baseline == 0 {
            return 0.0;
        }
        let m = if with_degree_messages {
            self.totals.messages()
        } else {
            self.totals.edge_aggregations
        };
        100.0 * (1.0 - m as f64 / self.baseline as f64)
    }
}

fn merge_counts(a: &mut Vec<u32>, b: &[u32]) {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}
