//! Distance-windowed ("truncated") propagation.
//!
//! For a source `s` and offset `δ`, node `o` only updates at layers
//! `t ∈ [dist(s,o), dist(s,o)+δ]`, and only from neighbours `v` with
//! `dist(s,v) < dist(s,o)+δ`. The final value of `o` is then the `⊕` over
//! walks of length `dist(s,o)..=dist(s,o)+δ`, and each node and edge is
//! touched at most `δ+1` times whatever the layer count.

mod accounting;
mod engine;
mod mask;
mod schedule;
mod trace;

pub use accounting::{
    classify_pruned_messages, count_baseline_messages, message_reduction_report, PrunedComposition,
    ReductionReport,
};
pub(crate) use engine::truncated_with_context;
pub use engine::{count_messages, truncated_bellman_ford, TruncatedOptions, TruncatedRun};
pub use mask::{Admitted, EdgeMask, FnMask, MaskTable};
pub use schedule::{LayerVisitor, Schedule};
pub use trace::{LayerCounters, PropagationTrace};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{bfs_distances_filtered, DistanceMap, EntityId, KnowledgeGraph, Triple};

/// Offset `δ ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub delta: u32,
}

impl Window {
    pub fn new(delta: u32) -> Self {
        Window { delta }
    }
}

/// Alternative node-window rules, used to check that the verification
/// suite detects a broken schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WindowRule {
    #[default]
    Standard,
    /// Keeps nodes updating one layer past `dist + δ`.
    InjectedOffByOne,
}

/// Per-source distances plus the window; everything the constraints need.
#[derive(Debug, Clone)]
pub struct ConstraintContext<'g> {
    graph: &'g KnowledgeGraph,
    distances: Arc<DistanceMap>,
    window: Window,
    rule: WindowRule,
    removed: Vec<usize>,
}

impl<'g> ConstraintContext<'g> {
    pub fn new(graph: &'g KnowledgeGraph, source: EntityId, window: Window) -> Result<Self> {
        Self::excluding(graph, source, window, Vec::new())
    }

    /// Context on the graph with the edges in `removed` deleted.
    pub fn excluding(
        graph: &'g KnowledgeGraph,
        source: EntityId,
        window: Window,
        mut removed: Vec<usize>,
    ) -> Result<Self> {
        removed.sort_unstable();
        removed.dedup();
        if let Some(&i) = removed.iter().find(|&&i| i >= graph.edge_count()) {
            return Err(Error::Bounds {
                kind: "edge",
                index: i,
                size: graph.edge_count(),
            });
        }
        let distances = bfs_distances_filtered(graph, source, |i| removed.binary_search(&i).is_err())?;
        Ok(ConstraintContext {
            graph,
            distances: Arc::new(distances),
            window,
            rule: WindowRule::Standard,
            removed,
        })
    }

    pub fn with_distances(graph: &'g KnowledgeGraph, distances: Arc<DistanceMap>, window: Window) -> Result<Self> {
        if distances.len() != graph.entity_count() {
            return Err(Error::Precondition(
                "distance map does not match graph size".into(),
            ));
        }
        Ok(ConstraintContext {
            graph,
            distances,
            window,
            rule: WindowRule::Standard,
            removed: Vec::new(),
        })
    }

    pub fn with_rule(mut self, rule: WindowRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn graph(&self) -> &'g KnowledgeGraph {
        self.graph
    }

    pub fn source(&self) -> EntityId {
        self.distances.source()
    }

    pub fn distances(&self) -> &DistanceMap {
        &self.distances
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn removed(&self) -> &[usize] {
        &self.removed
    }

    #[inline]
    pub(crate) fn is_removed(&self, edge: usize) -> bool {
        !self.removed.is_empty() && self.removed.binary_search(&edge).is_ok()
    }

    #[inline]
    pub fn dist(&self, o: EntityId) -> Option<u32> {
        self.distances.get(o)
    }

    /// `t − δ ≤ dist(s,o) ≤ t`, false for unreachable nodes.
    #[inline]
    pub fn node_update_active(&self, o: EntityId, t: usize) -> bool {
        let Some(d) = self.dist(o) else {
            return false;
        };
        let (d, t) = (d as i64, t as i64);
        let upper = match self.rule {
            WindowRule::Standard => d + self.window.delta as i64,
            WindowRule::InjectedOffByOne => d + self.window.delta as i64 + 1,
        };
        d <= t && t <= upper
    }

    /// The edge part of the constraint: `dist(s,v)` finite and `< dist(s,o) + δ`.
    #[inline]
    pub(crate) fn edge_admissible(&self, sender: EntityId, target_dist: u32) -> bool {
        self.dist(sender)
            .is_some_and(|dv| dv < target_dist + self.window.delta)
    }

    /// `C(s, o, t)` as edge indices in `E(o)` order.
    pub fn constrained_edges(&self, o: EntityId, t: usize) -> Vec<usize> {
        if t == 0 || !self.node_update_active(o, t) {
            return Vec::new();
        }
        let d_o = self.dist(o).expect("active nodes are reachable");
        self.graph
            .incoming(o)
            .iter()
            .copied()
            .filter(|&i| !self.is_removed(i) && self.edge_admissible(self.graph.edge(i).subject, d_o))
            .collect()
    }

    pub fn constrained_edge_set(&self, o: EntityId, t: usize) -> Vec<Triple> {
        self.constrained_edges(o, t)
            .into_iter()
            .map(|i| self.graph.edge(i))
            .collect()
    }

    /// `b_o` on the graph this context propagates over.
    pub fn degree(&self, o: EntityId) -> usize {
        if self.removed.is_empty() {
            self.graph.in_degree(o)
        } else {
            self.graph
                .incoming(o)
                .iter()
                .filter(|&&i| !self.is_removed(i))
                .count()
        }
    }
}

/// `ρ_o = b_o − |C(s,o,t)|`.
pub fn degree_message_units(graph: &KnowledgeGraph, o: EntityId, constrained_set_size: usize) -> Result<usize> {
    graph.check_entity(o)?;
    let b = graph.in_degree(o);
    b.checked_sub(constrained_set_size).ok_or_else(|| {
        Error::Invariant(format!(
            "constrained set of {o} has {constrained_set_size} edges but its degree is {b}"
        ))
    })
}

/// BFS results shared across runs, keyed by source.
#[derive(Debug, Default)]
pub struct DistanceCache {
    maps: Mutex<HashMap<EntityId, Arc<DistanceMap>>>,
}

impl DistanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, graph: &KnowledgeGraph, source: EntityId) -> Result<Arc<DistanceMap>> {
        if let Some(d) = self.maps.lock().expect("cache lock").get(&source) {
            return Ok(Arc::clone(d));
        }
        let d = Arc::new(crate::kg::bfs_distances(graph, source)?);
        self.maps
            .lock()
            .expect("cache lock")
            .insert(source, Arc::clone(&d));
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.maps.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: u32) -> KnowledgeGraph {
        KnowledgeGraph::new(
            n as usize,
            1,
            (0..n - 1).map(|i| Triple::new(i, 0, i + 1)).collect(),
        )
        .unwrap()
        .augment_reciprocal()
        .unwrap()
    }

    #[test]
    fn constrained_set_on_chain() {
        let g = chain(3);
        let ctx = ConstraintContext::new(&g, EntityId(0), Window::new(0)).unwrap();
        assert!(ctx.constrained_edge_set(EntityId(2), 1).is_empty());
        assert_eq!(ctx.constrained_edge_set(EntityId(2), 2), vec![Triple::new(1, 0, 2)]);
        assert!(ctx.constrained_edge_set(EntityId(2), 3).is_empty());
    }

    #[test]
    fn unreachable_yields_empty_set() {
        let g = KnowledgeGraph::new(3, 1, vec![Triple::new(0, 0, 1)]).unwrap();
        let ctx = ConstraintContext::new(&g, EntityId(0), Window::new(2)).unwrap();
        for t in 0..5 {
            assert!(ctx.constrained_edges(EntityId(2), t).is_empty());
            assert!(!ctx.node_update_active(EntityId(2), t));
        }
    }

    #[test]
    fn activity_window() {
        let g = chain(4);
        let ctx = ConstraintContext::new(&g, EntityId(0), Window::new(1)).unwrap();
        let active: Vec<usize> = (1..6).filter(|&t| ctx.node_update_active(EntityId(2), t)).collect();
        assert_eq!(active, vec![2, 3]);
        let ctx0 = ConstraintContext::new(&g, EntityId(0), Window::new(0)).unwrap();
        for o in 1..4u32 {
            let active: Vec<usize> = (1..8).filter(|&t| ctx0.node_update_active(EntityId(o), t)).collect();
            assert_eq!(active, vec![o as usize]);
        }
        // the source is active on 1..=δ
        assert!(!ctx0.node_update_active(EntityId(0), 1));
        assert!(ctx.node_update_active(EntityId(0), 1));
        assert!(!ctx.node_update_active(EntityId(0), 2));
    }

    #[test]
    fn figure_style_window_blocks_early_messages() {
        // s=0 → 1 → 2 → 3 with δ=1: node 3 (dist 3) aggregates nothing before layer 3.
        let g = chain(5);
        let ctx = ConstraintContext::new(&g, EntityId(0), Window::new(1)).unwrap();
        for t in 1..3 {
            assert!(ctx.constrained_edges(EntityId(3), t).is_empty());
        }
        let at3 = ctx.constrained_edge_set(EntityId(3), 3);
        assert!(at3.contains(&Triple::new(2, 0, 3)));
        // node 4 sits at dist 4 and may use node 3 (dist 3 < 4+1) but not beyond.
        assert!(ctx.constrained_edges(EntityId(4), 3).is_empty());
    }

    #[test]
    fn degree_messages() {
        let g = KnowledgeGraph::new(
            5,
            1,
            (0..4).map(|i| Triple::new(i, 0, 4)).collect(),
        )
        .unwrap();
        assert_eq!(degree_message_units(&g, EntityId(4), 2).unwrap(), 2);
        assert_eq!(degree_message_units(&g, EntityId(4), 4).unwrap(), 0);
        assert_eq!(degree_message_units(&g, EntityId(0), 0).unwrap(), 0);
        assert!(matches!(
            degree_message_units(&g, EntityId(4), 5),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn removed_edges_change_distances() {
        let g = chain(3);
        let ctx = ConstraintContext::excluding(&g, EntityId(0), Window::new(0), vec![0]).unwrap();
        assert_eq!(ctx.dist(EntityId(1)), None);
        assert_eq!(ctx.degree(EntityId(1)), 1);
        assert!(ConstraintContext::excluding(&g, EntityId(0), Window::new(0), vec![99]).is_err());
    }

    #[test]
    fn cache_reuses_maps() {
        let g = chain(4);
        let cache = DistanceCache::new();
        let a = cache.get(&g, EntityId(1)).unwrap();
        let b = cache.get(&g, EntityId(1)).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.len(), 1);
    }
}
