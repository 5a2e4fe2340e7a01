use crate::error::Result;
use crate::kg::{DistanceMap, EntityId, KnowledgeGraph, RelationId};
use crate::semiring::Semiring;

use super::mask::EdgeMask;
use super::schedule::{LayerVisitor, Schedule};
use super::trace::PropagationTrace;
use super::{ConstraintContext, Window};

#[derive(Clone, Copy)]
pub struct TruncatedOptions<'m> {
    pub layers: usize,
    pub window: Window,
    pub mask: Option<&'m dyn EdgeMask>,
    /// Counted in the trace; degree messages carry no semiring value.
    pub degree_messages: bool,
}

impl<'m> TruncatedOptions<'m> {
    pub fn new(layers: usize, delta: u32) -> Self {
        TruncatedOptions {
            layers,
            window: Window::new(delta),
            mask: None,
            degree_messages: false,
        }
    }

    pub fn with_mask(mut self, mask: &'m dyn EdgeMask) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn with_degree_messages(mut self, on: bool) -> Self {
        self.degree_messages = on;
        self
    }
}

#[derive(Debug, Clone)]
pub struct TruncatedRun<V> {
    pub source: EntityId,
    /// `x^F(s, o)`: the state after the node's last scheduled update.
    pub values: Vec<V>,
    pub trace: PropagationTrace,
    pub distances: DistanceMap,
}

struct SemiringVisitor<'a, S: Semiring> {
    semiring: &'a S,
    graph: &'a KnowledgeGraph,
    weights: Vec<S::Value>,
    boundary: Vec<S::Value>,
    states: Vec<S::Value>,
    pending: Vec<(usize, S::Value)>,
}

impl<S: Semiring> LayerVisitor for SemiringVisitor<'_, S> {
    fn update(&mut self, _: usize, o: EntityId, admitted: &[usize], _: usize) -> Result<()> {
        let s = self.semiring;
        let mut acc = s.zero();
        for &i in admitted {
            let h = &self.states[self.graph.edge(i).subject.index()];
            if s.is_zero(h) {
                continue;
            }
            s.combine_into(&mut acc, &s.extend(h, &self.weights[i]));
        }
        s.combine_into(&mut acc, &self.boundary[o.index()]);
        s.check(&acc)?;
        self.pending.push((o.index(), acc));
        Ok(())
    }

    fn end_layer(&mut self, _: usize) -> Result<()> {
        for (o, v) in self.pending.drain(..) {
            self.states[o] = v;
        }
        Ok(())
    }
}

/// Truncated generalized Bellman-Ford from `source`; see the module docs.
pub fn truncated_bellman_ford<S: Semiring>(
    graph: &KnowledgeGraph,
    source: EntityId,
    query: RelationId,
    semiring: &S,
    opts: TruncatedOptions<'_>,
) -> Result<TruncatedRun<S::Value>> {
    let ctx = ConstraintContext::new(graph, source, opts.window)?;
    truncated_with_context(&ctx, query, semiring, opts)
}

pub(crate) fn truncated_with_context<S: Semiring>(
    ctx: &ConstraintContext<'_>,
    query: RelationId,
    semiring: &S,
    opts: TruncatedOptions<'_>,
) -> Result<TruncatedRun<S::Value>> {
    let graph = ctx.graph();
    let n = graph.entity_count();
    let source = ctx.source();
    let mut boundary = vec![semiring.zero(); n];
    boundary[source.index()] = semiring.one();
    let mut visitor = SemiringVisitor {
        semiring,
        graph,
        weights: graph.edges().iter().map(|e| semiring.edge_weight(e, query)).collect(),
        states: boundary.clone(),
        boundary,
        pending: Vec::new(),
    };
    let trace = Schedule {
        ctx,
        layers: opts.layers,
        mask: opts.mask,
        degree_messages: opts.degree_messages,
    }
    .run(&mut visitor)?;
    Ok(TruncatedRun {
        source,
        values: visitor.states,
        trace,
        distances: ctx.distances().clone(),
    })
}

/// Runs only the schedule and returns its trace.
pub fn count_messages(
    graph: &KnowledgeGraph,
    source: EntityId,
    opts: TruncatedOptions<'_>,
) -> Result<PropagationTrace> {
    let ctx = ConstraintContext::new(graph, source, opts.window)?;
    Schedule {
        ctx: &ctx,
        layers: opts.layers,
        mask: opts.mask,
        degree_messages: opts.degree_messages,
    }
    .run(&mut ())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::kg::Triple;
    use crate::semiring::{generalized_bellman_ford, PathCount};
    use crate::truncated::{Admitted, FnMask};
    use num_bigint::BigUint;

    fn chain(n: u32) -> KnowledgeGraph {
        KnowledgeGraph::new(n as usize, 1, (0..n - 1).map(|i| Triple::new(i, 0, i + 1)).collect())
            .unwrap()
            .augment_reciprocal()
            .unwrap()
    }

    #[test]
    fn chain_shortest_walk_only() {
        let g = chain(4);
        let run = truncated_bellman_ford(&g, EntityId(0), RelationId(0), &PathCount, TruncatedOptions::new(3, 0)).unwrap();
        assert_eq!(run.values[3], BigUint::from(1u32));
        assert_eq!(run.values[0], BigUint::from(1u32));
        run.trace.check_update_bound(0).unwrap();
        assert!(run.trace.accounting_balances());
    }

    #[test]
    fn far_nodes_never_update() {
        // chain with δ=1, T=3: nodes at distance ≥ 4 stay at zero.
        let g = chain(7);
        let run = truncated_bellman_ford(&g, EntityId(0), RelationId(0), &PathCount, TruncatedOptions::new(3, 1)).unwrap();
        for o in 4..7 {
            assert_eq!(run.values[o], BigUint::from(0u32));
            assert_eq!(run.trace.node_update_counts[o], 0);
        }
        assert!(run.values[3] > BigUint::from(0u32));
    }

    #[test]
    fn zero_layers_rejected() {
        let g = chain(2);
        let err = truncated_bellman_ford(&g, EntityId(0), RelationId(0), &PathCount, TruncatedOptions::new(0, 1)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn large_delta_matches_unconstrained() {
        let g = KnowledgeGraph::new(
            4,
            2,
            vec![Triple::new(0, 0, 1), Triple::new(1, 1, 2), Triple::new(0, 1, 2), Triple::new(2, 0, 3), Triple::new(3, 0, 0)],
        )
        .unwrap()
        .augment_reciprocal()
        .unwrap();
        let t = 4;
        let run = truncated_bellman_ford(&g, EntityId(0), RelationId(0), &PathCount, TruncatedOptions::new(t, t as u32)).unwrap();
        let gbf = generalized_bellman_ford(&g, EntityId(0), RelationId(0), &PathCount, t).unwrap();
        assert_eq!(run.values, gbf[t].values);
    }

    #[test]
    fn mask_intersection_restricts_edges() {
        let g = chain(3);
        let none = FnMask(|_, _, _| Admitted::Only(vec![]));
        let opts = TruncatedOptions::new(3, 1).with_mask(&none);
        let run = truncated_bellman_ford(&g, EntityId(0), RelationId(0), &PathCount, opts).unwrap();
        assert_eq!(run.trace.totals.edge_aggregations, 0);
        assert!(run.trace.totals.pruned_other > 0);
        assert!(run.trace.accounting_balances());
        assert_eq!(run.values[2], BigUint::from(0u32));
    }

    #[test]
    fn mask_outside_incoming_set_is_an_error() {
        let g = chain(3);
        let bad = FnMask(|_, _, _| Admitted::Only(vec![usize::MAX]));
        let err = count_messages(&g, EntityId(0), TruncatedOptions::new(2, 0).with_mask(&bad)).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    #[test]
    fn degree_units_count_node_updates() {
        let g = chain(4);
        let t = count_messages(&g, EntityId(0), TruncatedOptions::new(3, 0).with_degree_messages(true)).unwrap();
        assert_eq!(t.totals.degree_message_units, t.totals.node_updates);
        // nodes 1 and 2 each have 2 incoming edges but only 1 admitted; node 3 has 1 of 1.
        assert_eq!(t.totals.degree_messages_represented, 2);
    }
}
