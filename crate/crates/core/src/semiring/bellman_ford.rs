use crate::error::Result;
use crate::kg::{EntityId, KnowledgeGraph, RelationId};

use super::Semiring;

/// Values of every entity for one source after `layer` iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerValues<V> {
    pub source: EntityId,
    pub layer: usize,
    pub values: Vec<V>,
}

/// Runs `layers` iterations of
///
/// ```text
/// h⁽⁰⁾(o) = 1(o = s)
/// h⁽ᵗ⁾(o) = ⊕_{(x,r,o) ∈ E(o)} h⁽ᵗ⁻¹⁾(x) ⊗ w_q(x,r,o)  ⊕  h⁽⁰⁾(o)
/// ```
///
/// and returns all `layers + 1` layers. Layer `t` holds the `⊕` over walks
/// of length `0..=t`.
pub fn generalized_bellman_ford<S: Semiring>(
    graph: &KnowledgeGraph,
    source: EntityId,
    query: RelationId,
    semiring: &S,
    layers: usize,
) -> Result<Vec<LayerValues<S::Value>>> {
    graph.check_entity(source)?;
    let n = graph.entity_count();
    let mut boundary = vec![semiring.zero(); n];
    boundary[source.index()] = semiring.one();
    let weights: Vec<S::Value> = graph
        .edges()
        .iter()
        .map(|e| semiring.edge_weight(e, query))
        .collect();

    let mut out = Vec::with_capacity(layers + 1);
    out.push(LayerValues {
        source,
        layer: 0,
        values: boundary.clone(),
    });
    for t in 1..=layers {
        let prev = &out[t - 1].values;
        let mut next = Vec::with_capacity(n);
        for o in graph.entities() {
            let mut acc = semiring.zero();
            for &i in graph.incoming(o) {
                let x = graph.edge(i).subject;
                let h = &prev[x.index()];
                if semiring.is_zero(h) {
                    continue;
                }
                semiring.combine_into(&mut acc, &semiring.extend(h, &weights[i]));
            }
            semiring.combine_into(&mut acc, &boundary[o.index()]);
            semiring.check(&acc)?;
            next.push(acc);
        }
        out.push(LayerValues {
            source,
            layer: t,
            values: next,
        });
    }
    Ok(out)
}
