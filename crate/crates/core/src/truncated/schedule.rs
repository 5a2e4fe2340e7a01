use crate::error::{Error, Result};
use crate::kg::EntityId;

use super::mask::{Admitted, EdgeMask};
use super::trace::{LayerCounters, PropagationTrace};
use super::ConstraintContext;

/// Receives the update schedule layer by layer. `update` is called once per
/// active node with the admitted edges `C(s,o,t) ∩ A(s,o,t)` and `ρ_o`;
/// values written during a layer must only become visible at `end_layer`.
pub trait LayerVisitor {
    fn update(&mut self, layer: usize, node: EntityId, admitted: &[usize], rho: usize) -> Result<()>;

    fn end_layer(&mut self, _layer: usize) -> Result<()> {
        Ok(())
    }
}

impl LayerVisitor for () {
    fn update(&mut self, _: usize, _: EntityId, _: &[usize], _: usize) -> Result<()> {
        Ok(())
    }
}

/// The truncated update schedule, shared by the semiring and neural engines.
pub struct Schedule<'c, 'g> {
    pub ctx: &'c ConstraintContext<'g>,
    pub layers: usize,
    pub mask: Option<&'c dyn EdgeMask>,
    pub degree_messages: bool,
}

impl Schedule<'_, '_> {
    pub fn run(&self, visitor: &mut impl LayerVisitor) -> Result<PropagationTrace> {
        if self.layers < 1 {
            return Err(Error::Precondition("truncated propagation needs T ≥ 1".into()));
        }
        let ctx = self.ctx;
        let graph = ctx.graph();
        let source = ctx.source();
        let live_edges = graph.edge_count() - ctx.removed().len();
        let mut trace = PropagationTrace::new(
            self.layers,
            graph.entity_count(),
            graph.edge_count(),
            (self.layers * live_edges) as u64,
        );
        let mut admitted = Vec::new();
        for t in 1..=self.layers {
            let mut c = LayerCounters::default();
            for o in graph.entities() {
                let incoming = graph.incoming(o);
                let Some(d_o) = ctx.dist(o) else {
                    c.never_schedulable += incoming.iter().filter(|&&i| !ctx.is_removed(i)).count() as u64;
                    continue;
                };
                let active = ctx.node_update_active(o, t);
                let mask = match (active, self.mask) {
                    (true, Some(m)) => {
                        let a = m.admitted(source, o, t);
                        if let Admitted::Only(v) = &a {
                            if let Some(&bad) = v.iter().find(|e| !incoming.contains(e)) {
                                return Err(Error::Invariant(format!(
                                    "mask admitted edge {bad} which does not end at {o}"
                                )));
                            }
                        }
                        a
                    }
                    _ => Admitted::All,
                };
                admitted.clear();
                let mut degree = 0usize;
                for &i in incoming {
                    if ctx.is_removed(i) {
                        continue;
                    }
                    degree += 1;
                    let v = graph.edge(i).subject;
                    if active && ctx.edge_admissible(v, d_o) {
                        if mask.contains(i) {
                            admitted.push(i);
                        } else {
                            c.pruned_other += 1;
                        }
                    } else if ctx.dist(v).is_none_or(|dv| (t as u64) <= dv as u64) {
                        // sender holds nothing at t−1
                        c.pruned_empty += 1;
                    } else {
                        c.pruned_redundant += 1;
                    }
                }
                if !active {
                    continue;
                }
                let rho = degree - admitted.len();
                c.node_updates += 1;
                c.edge_aggregations += admitted.len() as u64;
                if self.degree_messages {
                    c.degree_message_units += 1;
                    c.degree_messages_represented += rho as u64;
                }
                trace.node_update_counts[o.index()] += 1;
                for &i in &admitted {
                    trace.edge_aggregation_counts[i] += 1;
                }
                visitor.update(t, o, &admitted, rho)?;
            }
            visitor.end_layer(t)?;
            trace.layers[t - 1] = c;
        }
        trace.finish();
        Ok(trace)
    }
}
