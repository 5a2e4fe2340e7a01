use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};

use super::engine::{count_messages, TruncatedOptions};
use super::trace::LayerCounters;
use super::{ConstraintContext, Window};

/// `T · |E|`: messages aggregated by propagation that visits every edge at
/// every layer.
pub fn count_baseline_messages(graph: &KnowledgeGraph, layers: usize) -> Result<u64> {
    if layers < 1 {
        return Err(Error::Precondition("baseline needs T ≥ 1".into()));
    }
    Ok(layers as u64 * graph.edge_count() as u64)
}

/// Pruned `(edge, layer)` pairs split by why they carry nothing useful.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PrunedComposition {
    /// Sender had no path information at `t − 1`.
    pub empty: u64,
    /// Sender had information but only for walks outside the target's window.
    pub redundant: u64,
    /// Edges into unreachable targets. Their senders are unreachable too,
    /// so these are empty messages as well.
    pub never_schedulable: u64,
}

impl PrunedComposition {
    pub fn add(&mut self, o: &PrunedComposition) {
        self.empty += o.empty;
        self.redundant += o.redundant;
        self.never_schedulable += o.never_schedulable;
    }

    pub fn total(&self) -> u64 {
        self.empty + self.redundant + self.never_schedulable
    }

    /// Share of pruned messages that are empty (unreachable targets included).
    pub fn empty_percent(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        100.0 * (self.empty + self.never_schedulable) as f64 / total as f64
    }

    pub fn redundant_percent(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        100.0 * self.redundant as f64 / total as f64
    }
}

impl From<&LayerCounters> for PrunedComposition {
    fn from(c: &LayerCounters) -> Self {
        PrunedComposition {
            empty: c.pruned_empty,
            redundant: c.pruned_redundant,
            never_schedulable: c.never_schedulable,
        }
    }
}

/// Classifies every pruned `(edge, layer)` pair in closed form from the
/// distances alone, without running the schedule.
///
/// For an edge `v → o` the aggregated layers form the interval
/// `[max(d_o, 1), min(d_o + δ, T)]` when `d_v < d_o + δ`, and nothing
/// otherwise. A pruned layer `t` is empty iff `t ≤ d_v`.
pub fn classify_pruned_messages(ctx: &ConstraintContext<'_>, layers: usize) -> PrunedComposition {
    let graph = ctx.graph();
    let delta = ctx.window().delta as i64;
    let t_max = layers as i64;
    let mut out = PrunedComposition::default();
    for (i, e) in graph.edges().iter().enumerate() {
        if ctx.is_removed(i) {
            continue;
        }
        let Some(d_o) = ctx.dist(e.object) else {
            out.never_schedulable += layers as u64;
            continue;
        };
        let d_o = d_o as i64;
        let d_v = ctx.dist(e.subject).map(|d| d as i64);
        let (lo, hi) = (d_o.max(1), (d_o + delta).min(t_max));
        let aggregated = match d_v {
            Some(dv) if dv < d_o + delta => (hi - lo + 1).max(0),
            _ => 0,
        };
        let pruned = t_max - aggregated;
        // layers 1..=min(T, d_v) are the ones whose sender is still empty
        let empty_span = d_v.map_or(t_max, |dv| dv.min(t_max));
        let empty_aggregated = if aggregated > 0 {
            (hi.min(empty_span) - lo + 1).max(0)
        } else {
            0
        };
        let empty = empty_span - empty_aggregated;
        out.empty += empty as u64;
        out.redundant += (pruned - empty) as u64;
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub sources: usize,
    pub layers: usize,
    pub delta: u32,
    pub baseline_messages: u64,
    pub edge_aggregations: u64,
    pub degree_message_units: u64,
    /// Mean over sources of `100 · (1 − aggregations / baseline)`.
    pub reduction_percent: f64,
    /// Same, counting one extra message per node update for degree messages.
    pub reduction_percent_with_degree: f64,
    pub composition: PrunedComposition,
    pub per_layer: Vec<LayerCounters>,
    pub max_node_updates: u32,
    pub max_edge_aggregations: u32,
}

/// Message reduction of truncated propagation against `T · |E|`, per source
/// and averaged.
pub fn message_reduction_report(
    graph: &KnowledgeGraph,
    sources: &[EntityId],
    layers: usize,
    window: Window,
) -> Result<ReductionReport> {
    if sources.is_empty() {
        return Err(Error::Precondition("message reduction needs at least one source".into()));
    }
    let opts = TruncatedOptions {
        layers,
        window,
        mask: None,
        degree_messages: true,
    };
    let traces = sources
        .par_iter()
        .map(|&s| {
            let t = count_messages(graph, s, opts)?;
            Ok((
                t.reduction_percent(false),
                t.reduction_percent(true),
                t.max_node_updates(),
                t.max_edge_aggregations(),
                t.layers,
                t.baseline,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_layer = vec![LayerCounters::default(); layers];
    let (mut red, mut red_deg) = (0.0, 0.0);
    let (mut max_nodes, mut max_edges, mut baseline) = (0, 0, 0);
    for (r, rd, mn, me, l, b) in &traces {
        red += r;
        red_deg += rd;
        max_nodes = max_nodes.max(*mn);
        max_edges = max_edges.max(*me);
        baseline += b;
        for (a, c) in per_layer.iter_mut().zip(l) {
            a.add(c);
        }
    }
    let mut totals = LayerCounters::default();
    for l in &per_layer {
        totals.add(l);
    }
    let n = sources.len() as f64;
    Ok(ReductionReport {
        sources: sources.len(),
        layers,
        delta: window.delta,
        baseline_messages: baseline,
        edge_aggregations: totals.edge_aggregations,
        degree_message_units: totals.degree_message_units,
        reduction_percent: red / n,
        reduction_percent_with_degree: red_deg / n,
        composition: PrunedComposition::from(&totals),
        per_layer,
        max_node_updates: max_nodes,
        max_edge_aggregations: max_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Triple;

    fn star(leaves: u32) -> KnowledgeGraph {
        KnowledgeGraph::new(leaves as usize + 1, 1, (1..=leaves).map(|i| Triple::new(0, 0, i)).collect())
            .unwrap()
            .augment_reciprocal()
            .unwrap()
    }

    fn complete_digraph(n: u32) -> KnowledgeGraph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    edges.push(Triple::new(a, 0, b));
                }
            }
        }
        KnowledgeGraph::new(n as usize, 1, edges).unwrap()
    }

    #[test]
    fn baseline_counts() {
        let g = KnowledgeGraph::new(10, 1, (0..10).map(|i| Triple::new(i, 0, (i + 1) % 10)).collect()).unwrap();
        assert_eq!(count_baseline_messages(&g, 6).unwrap(), 60);
        assert!(count_baseline_messages(&g, 0).is_err());
    }

    #[test]
    fn star_from_center_with_delta_equal_layers_prunes_nothing() {
        let g = star(4);
        let t = 3;
        let ctx = ConstraintContext::new(&g, EntityId(0), Window::new(t as u32)).unwrap();
        assert_eq!(classify_pruned_messages(&ctx, t), PrunedComposition::default());
        let trace = count_messages(&g, EntityId(0), TruncatedOptions::new(t, t as u32)).unwrap();
        assert_eq!(trace.totals.edge_aggregations, (t * g.edge_count()) as u64);
    }

    #[test]
    fn complete_k3_hand_count() {
        // K3 from 0, T = 2, δ = 1. dist: 0 → 0, 1 → 1, 2 → 1.
        // Node 0 is active at t = 1 only; nodes 1, 2 at t ∈ {1, 2}.
        // t=1: node 0 takes 1→0, 2→0 (d_v=1 < 0+1? no) → 0 edges;
        //      node 1 takes 0→1 (0<2) and 2→1 (1<2) → 2; node 2 likewise → 2.
        // t=2: node 0 inactive; nodes 1, 2 again 2 each → 4.
        // Aggregated 8 of baseline 12.
        let g = complete_digraph(3);
        let trace = count_messages(&g, EntityId(0), TruncatedOptions::new(2, 1)).unwrap();
        assert_eq!(trace.baseline, 12);
        assert_eq!(trace.totals.edge_aggregations, 8);
        assert_eq!(trace.totals.node_updates, 5);
        assert!((trace.reduction_percent(false) - 100.0 * (1.0 - 8.0 / 12.0)).abs() < 1e-12);
        // Pruned: 1→0, 2→0 at t=1 (senders empty at t−1=0) and at t=2 (redundant).
        assert_eq!(trace.totals.pruned_empty, 2);
        assert_eq!(trace.totals.pruned_redundant, 2);
        let ctx = ConstraintContext::new(&g, EntityId(0), Window::new(1)).unwrap();
        let c = classify_pruned_messages(&ctx, 2);
        assert_eq!((c.empty, c.redundant), (2, 2));
    }

    #[test]
    fn reduction_report_averages_sources() {
        let g = complete_digraph(3);
        let r = message_reduction_report(&g, &[EntityId(0), EntityId(1)], 2, Window::new(1)).unwrap();
        assert_eq!(r.baseline_messages, 24);
        assert!((r.reduction_percent - 100.0 / 3.0).abs() < 1e-9);
        assert!(r.reduction_percent_with_degree < r.reduction_percent);
        assert!(message_reduction_report(&g, &[], 2, Window::new(1)).is_err());
    }
}
