//! Knowledge graph data model.
//!
//! A [`KnowledgeGraph`] is an immutable edge list over dense entity and
//! relation ids, with CSR indexes for incoming and outgoing edges. Incoming
//! lists are sorted by `(subject, relation)` so that every engine aggregates
//! in the same order.

mod analytics;
mod io;

pub use analytics::{
    bfs_distances, bfs_distances_filtered, distance_distribution, mean_degree, AnalyticsReport,
    DistanceHistogram, DistanceMap, HISTOGRAM_LABELS,
};
pub use io::{load_triples, write_triples, SplitDataset, Split, Vocab, VocabPolicy, Vocabs};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

impl Triple {
    pub fn new(subject: u32, relation: u32, object: u32) -> Self {
        Triple {
            subject: EntityId(subject),
            relation: RelationId(relation),
            object: EntityId(object),
        }
    }
}

/// Compressed adjacency: `items[offsets[v]..offsets[v + 1]]` are edge indices.
#[derive(Debug, Clone, Default)]
struct Csr {
    offsets: Vec<usize>,
    items: Vec<usize>,
}

impl Csr {
    fn build(nodes: usize, edges: &[Triple], key: impl Fn(&Triple) -> usize) -> Self {
        let mut offsets = vec![0usize; nodes + 1];
        for e in edges {
            offsets[key(e) + 1] += 1;
        }
        for i in 0..nodes {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut items = vec![0usize; edges.len()];
        for (i, e) in edges.iter().enumerate() {
            let k = key(e);
            items[cursor[k]] = i;
            cursor[k] += 1;
        }
        Csr { offsets, items }
    }

    #[inline]
    fn row(&self, v: usize) -> &[usize] {
        &self.items[self.offsets[v]..self.offsets[v + 1]]
    }
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entity_count: usize,
    relation_count: usize,
    original_relation_count: usize,
    edges: Vec<Triple>,
    incoming: Csr,
    outgoing: Csr,
    augmented: bool,
}

impl KnowledgeGraph {
    pub fn new(entity_count: usize, relation_count: usize, edges: Vec<Triple>) -> Result<Self> {
        for e in &edges {
            check_bounds("entity", e.subject.index(), entity_count)?;
            check_bounds("entity", e.object.index(), entity_count)?;
            check_bounds("relation", e.relation.index(), relation_count)?;
        }
        Ok(Self::assemble(
            entity_count,
            relation_count,
            relation_count,
            edges,
            false,
        ))
    }

    fn assemble(
        entity_count: usize,
        relation_count: usize,
        original_relation_count: usize,
        edges: Vec<Triple>,
        augmented: bool,
    ) -> Self {
        let mut incoming = Csr::build(entity_count, &edges, |e| e.object.index());
        for v in 0..entity_count {
            let (lo, hi) = (incoming.offsets[v], incoming.offsets[v + 1]);
            incoming.items[lo..hi].sort_by_key(|&i| (edges[i].subject, edges[i].relation, i));
        }
        let outgoing = Csr::build(entity_count, &edges, |e| e.subject.index());
        KnowledgeGraph {
            entity_count,
            relation_count,
            original_relation_count,
            edges,
            incoming,
            outgoing,
            augmented,
        }
    }

    /// Adds `(t, r⁻¹, h)` for every `(h, r, t)`, with `r⁻¹ = r + |R|`.
    ///
    /// Original edges keep their indices; the reciprocal of edge `i` is
    /// edge `i + |E|`.
    pub fn augment_reciprocal(&self) -> Result<Self> {
        if self.augmented {
            return Err(Error::Precondition(
                "graph is already augmented with reciprocal edges".into(),
            ));
        }
        let base = self.relation_count as u32;
        let mut edges = Vec::with_capacity(self.edges.len() * 2);
        edges.extend_from_slice(&self.edges);
        edges.extend(self.edges.iter().map(|e| Triple {
            subject: e.object,
            relation: RelationId(e.relation.0 + base),
            object: e.subject,
        }));
        Ok(Self::assemble(
            self.entity_count,
            self.relation_count * 2,
            self.relation_count,
            edges,
            true,
        ))
    }

    /// The same graph with every edge direction flipped (relations unchanged).
    pub fn reversed(&self) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Triple {
                subject: e.object,
                relation: e.relation,
                object: e.subject,
            })
            .collect();
        Self::assemble(
            self.entity_count,
            self.relation_count,
            self.original_relation_count,
            edges,
            self.augmented,
        )
    }

    /// Maps a relation to its reciprocal in an augmented graph (involution).
    pub fn reciprocal_relation(&self, r: RelationId) -> RelationId {
        let base = self.original_relation_count as u32;
        if r.0 < base {
            RelationId(r.0 + base)
        } else {
            RelationId(r.0 - base)
        }
    }

    pub fn reciprocal_edge(&self, e: &Triple) -> Triple {
        Triple {
            subject: e.object,
            relation: self.reciprocal_relation(e.relation),
            object: e.subject,
        }
    }

    pub fn entity_count(&self) -> usize {
        self.entity_count
    }

    pub fn relation_count(&self) -> usize {
        self.relation_count
    }

    pub fn original_relation_count(&self) -> usize {
        self.original_relation_count
    }

    pub fn is_augmented(&self) -> bool {
        self.augmented
    }

    pub fn edges(&self) -> &[Triple] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge count before reciprocal augmentation.
    pub fn original_edge_count(&self) -> usize {
        if self.augmented {
            self.edges.len() / 2
        } else {
            self.edges.len()
        }
    }

    #[inline]
    pub fn edge(&self, index: usize) -> Triple {
        self.edges[index]
    }

    /// Indices of the edges whose object is `o`, sorted by `(subject, relation)`.
    ///
    /// Panics if `o` is out of range; use [`KnowledgeGraph::incoming_edges`]
    /// for a checked lookup.
    #[inline]
    pub fn incoming(&self, o: EntityId) -> &[usize] {
        self.incoming.row(o.index())
    }

    #[inline]
    pub fn outgoing(&self, v: EntityId) -> &[usize] {
        self.outgoing.row(v.index())
    }

    pub fn incoming_edges(&self, o: EntityId) -> Result<Vec<Triple>> {
        self.check_entity(o)?;
        Ok(self.incoming(o).iter().map(|&i| self.edges[i]).collect())
    }

    /// `b_o`: number of incoming edges of `o` in this graph.
    #[inline]
    pub fn in_degree(&self, o: EntityId) -> usize {
        self.incoming(o).len()
    }

    pub fn check_entity(&self, e: EntityId) -> Result<()> {
        check_bounds("entity", e.index(), self.entity_count)
    }

    pub fn check_relation(&self, r: RelationId) -> Result<()> {
        check_bounds("relation", r.index(), self.relation_count)
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entity_count as u32).map(EntityId)
    }
}

fn check_bounds(kind: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::Bounds { kind, index, size })
    }
}
