use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

use super::{EntityId, KnowledgeGraph, Triple};

/// Shortest-path hop counts from one source. `None` means unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMap {
    source: EntityId,
    dist: Vec<Option<u32>>,
}

impl DistanceMap {
    pub fn source(&self) -> EntityId {
        self.source
    }

    #[inline]
    pub fn get(&self, o: EntityId) -> Option<u32> {
        self.dist[o.index()]
    }

    pub fn as_slice(&self) -> &[Option<u32>] {
        &self.dist
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// Largest finite distance (the eccentricity of the source).
    pub fn max_finite(&self) -> u32 {
        self.dist.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn reachable_count(&self) -> usize {
        self.dist.iter().filter(|d| d.is_some()).count()
    }
}

/// Unit-weight BFS over directed edges.
pub fn bfs_distances(graph: &KnowledgeGraph, source: EntityId) -> Result<DistanceMap> {
    bfs_distances_filtered(graph, source, |_| true)
}

/// BFS that only traverses edges for which `keep(edge_index)` holds.
pub fn bfs_distances_filtered(
    graph: &KnowledgeGraph,
    source: EntityId,
    keep: impl Fn(usize) -> bool,
) -> Result<DistanceMap> {
    graph.check_entity(source)?;
    let mut dist = vec![None; graph.entity_count()];
    dist[source.index()] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v.index()].expect("queued nodes have a distance");
        for &i in graph.outgoing(v) {
            if !keep(i) {
                continue;
            }
            let o = graph.edge(i).object;
            if dist[o.index()].is_none() {
                dist[o.index()] = Some(dv + 1);
                queue.push_back(o);
            }
        }
    }
    Ok(DistanceMap { source, dist })
}

/// `|E_original| / |V|`.
pub fn mean_degree(graph: &KnowledgeGraph) -> Result<f64> {
    if graph.entity_count() == 0 {
        return Err(Error::Undefined("mean degree of a graph with no entities".into()));
    }
    Ok(graph.original_edge_count() as f64 / graph.entity_count() as f64)
}

pub const HISTOGRAM_LABELS: [&str; 8] = ["0", "1", "2", "3", "4", "5", "6+", "unreachable"];

/// Sample counts by source-target distance. Distance 0 only occurs for
/// self-loop samples; it is kept as its own bucket so the buckets partition
/// the sample set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DistanceHistogram {
    pub counts: [u64; 8],
}

impl DistanceHistogram {
    fn bucket(d: Option<u32>) -> usize {
        match d {
            None => 7,
            Some(d) => (d as usize).min(6),
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, label: &str) -> u64 {
        HISTOGRAM_LABELS
            .iter()
            .position(|l| *l == label)
            .map_or(0, |i| self.counts[i])
    }

    /// Percentage of all samples in the bucket named `label`.
    pub fn percent(&self, label: &str) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        100.0 * self.count(label) as f64 / total as f64
    }

    pub fn percentages(&self) -> BTreeMap<&'static str, f64> {
        HISTOGRAM_LABELS.iter().map(|l| (*l, self.percent(l))).collect()
    }
}

/// Buckets `dist(s, o)` for every sample `(s, q, o)`. Requires the
/// reciprocal-augmented propagation graph.
pub fn distance_distribution(graph: &KnowledgeGraph, samples: &[Triple]) -> Result<DistanceHistogram> {
    if !graph.is_augmented() {
        return Err(Error::Precondition(
            "distance distribution is computed on the augmented graph".into(),
        ));
    }
    let mut by_source: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
    for t in samples {
        graph.check_entity(t.subject)?;
        graph.check_entity(t.object)?;
        by_source.entry(t.subject).or_default().push(t.object);
    }
    let groups: Vec<_> = by_source.into_iter().collect();
    let partial: Vec<DistanceHistogram> = groups
        .par_iter()
        .map(|(s, targets)| {
            let dm = bfs_distances(graph, *s)?;
            let mut h = DistanceHistogram::default();
            for &o in targets {
                h.counts[DistanceHistogram::bucket(dm.get(o))] += 1;
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    let mut hist = DistanceHistogram::default();
    for h in partial {
        for (a, b) in hist.counts.iter_mut().zip(h.counts) {
            *a += b;
        }
    }
    Ok(hist)
}

/// Dataset analytics document, emitted as JSON and TSV.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticsReport {
    pub dataset: String,
    /// `|E_original| / |V|`, rounded to one decimal.
    pub mean_degree: f64,
    pub distance_histogram: BTreeMap<&'static str, f64>,
    pub sample_count: u64,
}

impl AnalyticsReport {
    pub fn new(dataset: impl Into<String>, graph: &KnowledgeGraph, hist: &DistanceHistogram) -> Result<Self> {
        Ok(AnalyticsReport {
            dataset: dataset.into(),
            mean_degree: (mean_degree(graph)? * 10.0).round() / 10.0,
            distance_histogram: hist.percentages(),
            sample_count: hist.total(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key\tvalue\n");
        out.push_str(&format!("dataset\t{}\n", self.dataset));
        out.push_str(&format!("mean_degree\t{:.1}\n", self.mean_degree));
        out.push_str(&format!("sample_count\t{}\n", self.sample_count));
        for l in HISTOGRAM_LABELS {
            out.push_str(&format!("distance_{l}\t{:.3}\n", self.distance_histogram[l]));
        }
        out
    }
}
