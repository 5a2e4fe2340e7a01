//! Brute-force walk enumeration.
//!
//! Evaluates path sums by listing every walk explicitly, with no dynamic
//! programming, so it can serve as ground truth for the propagation
//! engines on small graphs. Walks may repeat nodes and edges.

mod suite;

pub use suite::{run_theorem_suite, Counterexample, SuiteConfig, SuiteReport};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::semiring::Semiring;

/// Default maximum walk length for exhaustive enumeration.
pub const DEFAULT_LENGTH_CAP: usize = 8;
/// Default maximum number of walks visited by one enumeration.
pub const DEFAULT_WALK_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    /// Edge indices `e_1..e_t`; consecutive edges share endpoints.
    pub edges: Vec<usize>,
    pub start: EntityId,
    pub end: EntityId,
}

impl Walk {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct WalkSet {
    pub source: EntityId,
    pub target: EntityId,
    pub length: usize,
    pub walks: Vec<Walk>,
}

#[derive(Debug, Clone, Copy)]
pub struct WalkEnumerator {
    pub length_cap: usize,
    pub walk_budget: usize,
}

impl Default for WalkEnumerator {
    fn default() -> Self {
        WalkEnumerator {
            length_cap: DEFAULT_LENGTH_CAP,
            walk_budget: DEFAULT_WALK_BUDGET,
        }
    }
}

impl WalkEnumerator {
    fn check_length(&self, t: usize) -> Result<()> {
        if t > self.length_cap {
            Err(Error::ResourceLimit(format!(
                "walk length {t} exceeds the enumeration cap {}",
                self.length_cap
            )))
        } else {
            Ok(())
        }
    }

    /// Every walk of exactly `t` edges from `s` to `o`, in lexicographic
    /// order of edge indices.
    pub fn walks(&self, graph: &KnowledgeGraph, s: EntityId, o: EntityId, t: usize) -> Result<WalkSet> {
        graph.check_entity(s)?;
        graph.check_entity(o)?;
        self.check_length(t)?;
        let mut out = Vec::new();
        let mut prefix = Vec::with_capacity(t);
        let mut visited = 0usize;
        self.extend_walks(graph, s, o, t, &mut prefix, &mut out, &mut visited, s)?;
        Ok(WalkSet {
            source: s,
            target: o,
            length: t,
            walks: out,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn extend_walks(
        &self,
        graph: &KnowledgeGraph,
        at: EntityId,
        target: EntityId,
        remaining: usize,
        prefix: &mut Vec<usize>,
        out: &mut Vec<Walk>,
        visited: &mut usize,
        start: EntityId,
    ) -> Result<()> {
        *visited += 1;
        if *visited > self.walk_budget {
            return Err(Error::ResourceLimit(format!(
                "more than {} walk prefixes",
                self.walk_budget
            )));
        }
        if remaining == 0 {
            if at == target {
                out.push(Walk {
                    edges: prefix.clone(),
                    start,
                    end: at,
                });
            }
            return Ok(());
        }
        let mut next: Vec<usize> = graph.outgoing(at).to_vec();
        next.sort_unstable();
        for i in next {
            prefix.push(i);
            self.extend_walks(graph, graph.edge(i).object, target, remaining - 1, prefix, out, visited, start)?;
            prefix.pop();
        }
        Ok(())
    }

    /// `⊗` of edge weights along one walk; the empty walk gives `one`.
    pub fn walk_product<S: Semiring>(graph: &KnowledgeGraph, walk: &Walk, query: RelationId, semiring: &S) -> S::Value {
        walk.edges.iter().fold(semiring.one(), |acc, &i| {
            semiring.extend(&acc, &semiring.edge_weight(&graph.edge(i), query))
        })
    }

    /// `⊕` over walks of length `t`.
    pub fn length_sum<S: Semiring>(
        &self,
        graph: &KnowledgeGraph,
        s: EntityId,
        o: EntityId,
        t: usize,
        query: RelationId,
        semiring: &S,
    ) -> Result<S::Value> {
        let set = self.walks(graph, s, o, t)?;
        Ok(set.walks.iter().fold(semiring.zero(), |acc, w| {
            semiring.combine(&acc, &Self::walk_product(graph, w, query, semiring))
        }))
    }

    /// `⊕` over walks of length `0..=T` (length 0 only exists for `o = s`).
    pub fn eval_path_formulation<S: Semiring>(
        &self,
        graph: &KnowledgeGraph,
        s: EntityId,
        o: EntityId,
        query: RelationId,
        semiring: &S,
        max_len: usize,
    ) -> Result<S::Value> {
        self.check_length(max_len)?;
        let mut acc = semiring.zero();
        for t in 0..=max_len {
            acc = semiring.combine(&acc, &self.length_sum(graph, s, o, t, query, semiring)?);
        }
        Ok(acc)
    }

    /// Length of the shortest walk from `s` to `o`, found by enumeration.
    pub fn shortest_walk_length(&self, graph: &KnowledgeGraph, s: EntityId, o: EntityId) -> Result<usize> {
        let search = self.length_cap.min(graph.entity_count().saturating_sub(1));
        for t in 0..=search {
            if !self.walks(graph, s, o, t)?.walks.is_empty() {
                return Ok(t);
            }
        }
        if search + 1 >= graph.entity_count() {
            Err(Error::Domain(format!("{o} is unreachable from {s}")))
        } else {
            Err(Error::ResourceLimit(format!(
                "no walk from {s} to {o} within the cap {}",
                self.length_cap
            )))
        }
    }

    /// `⊕` over walks of length `dist(s,o)..=dist(s,o)+δ`.
    pub fn eval_windowed_formulation<S: Semiring>(
        &self,
        graph: &KnowledgeGraph,
        s: EntityId,
        o: EntityId,
        query: RelationId,
        semiring: &S,
        delta: usize,
    ) -> Result<S::Value> {
        let d = self.shortest_walk_length(graph, s, o)?;
        self.check_length(d + delta)?;
        let mut acc = semiring.zero();
        for t in d..=d + delta {
            acc = semiring.combine(&acc, &self.length_sum(graph, s, o, t, query, semiring)?);
        }
        Ok(acc)
    }

    /// All walks from `s` of length `≤ max_len`, aggregated per `(end, length)`:
    /// `table.sums[o][t]` is the `⊕` of walk products and `table.counts[o][t]`
    /// the number of walks.
    pub fn walk_table<S: Semiring>(
        &self,
        graph: &KnowledgeGraph,
        s: EntityId,
        query: RelationId,
        semiring: &S,
        max_len: usize,
    ) -> Result<WalkTable<S::Value>> {
        graph.check_entity(s)?;
        self.check_length(max_len)?;
        let n = graph.entity_count();
        let mut table = WalkTable {
            sums: vec![vec![semiring.zero(); max_len + 1]; n],
            counts: vec![vec![0u64; max_len + 1]; n],
        };
        let weights: Vec<S::Value> = graph.edges().iter().map(|e| semiring.edge_weight(e, query)).collect();
        let mut visited = 0usize;
        let mut stack: Vec<(EntityId, S::Value, usize)> = vec![(s, semiring.one(), 0)];
        while let Some((at, product, len)) = stack.pop() {
            visited += 1;
            if visited > self.walk_budget {
                return Err(Error::ResourceLimit(format!("more than {} walks", self.walk_budget)));
            }
            let slot = &mut table.sums[at.index()][len];
            *slot = semiring.combine(slot, &product);
            table.counts[at.index()][len] += 1;
            if len < max_len {
                for &i in graph.outgoing(at).iter().rev() {
                    stack.push((graph.edge(i).object, semiring.extend(&product, &weights[i]), len + 1));
                }
            }
        }
        Ok(table)
    }
}

/// Per-target, per-length walk aggregates from one source.
#[derive(Debug, Clone)]
pub struct WalkTable<V> {
    pub sums: Vec<Vec<V>>,
    pub counts: Vec<Vec<u64>>,
}

impl<V: Clone> WalkTable<V> {
    /// Shortest walk length to `o` within the table, if any.
    pub fn shortest(&self, o: EntityId) -> Option<usize> {
        self.counts[o.index()].iter().position(|&c| c > 0)
    }

    /// `⊕` over lengths in `lo..=hi`.
    pub fn window_sum<S: Semiring<Value = V>>(&self, semiring: &S, o: EntityId, lo: usize, hi: usize) -> V {
        self.sums[o.index()][lo..=hi]
            .iter()
            .fold(semiring.zero(), |acc, v| semiring.combine(&acc, v))
    }
}

pub fn enumerate_walks(graph: &KnowledgeGraph, s: EntityId, o: EntityId, t: usize) -> Result<WalkSet> {
    WalkEnumerator::default().walks(graph, s, o, t)
}

pub fn eval_path_formulation<S: Semiring>(
    graph: &KnowledgeGraph,
    s: EntityId,
    o: EntityId,
    query: RelationId,
    semiring: &S,
    max_len: usize,
) -> Result<S::Value> {
    WalkEnumerator::default().eval_path_formulation(graph, s, o, query, semiring, max_len)
}

pub fn eval_windowed_formulation<S: Semiring>(
    graph: &KnowledgeGraph,
    s: EntityId,
    o: EntityId,
    query: RelationId,
    semiring: &S,
    delta: usize,
) -> Result<S::Value> {
    WalkEnumerator::default().eval_windowed_formulation(graph, s, o, query, semiring, delta)
}
