use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, SplitDataset, Triple};

use super::model::{loss_and_grad, score_all, TrainingExample};
use super::params::{Aggregation, AttentionMode, ModelConfig, ModelParams};

/// Largest propagation graph accepted by the CPU trainer.
pub const MAX_TRAIN_EDGES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub layers: usize,
    pub delta: u32,
    pub aggregation: Aggregation,
    pub attention: AttentionMode,
    pub share_attention: bool,
    pub temperature: f64,
    pub degree_messages: bool,
    pub negatives: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Self-adversarial negative weighting; `None` weights negatives uniformly.
    pub adversarial_temperature: Option<f64>,
    /// Hide the queried fact and its reciprocal while training on it.
    pub remove_query_edges: bool,
    pub seed: u64,
    /// `"synthetic"` or a directory with train/valid/test files.
    pub dataset: String,
    pub checkpoint: Option<String>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let m = ModelConfig::default();
        TrainConfig {
            dim: m.dim,
            layers: m.layers,
            delta: m.delta,
            aggregation: m.aggregation,
            attention: m.attention,
            share_attention: m.share_attention,
            temperature: m.temperature,
            degree_messages: m.degree_messages,
            negatives: 32,
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-3,
            adversarial_temperature: None,
            remove_query_edges: true,
            seed: 0,
            dataset: "synthetic".into(),
            checkpoint: None,
        }
    }
}

impl TrainConfig {
    /// Settings for the 50-entity synthetic graph: `T = 4`, `δ = 2`.
    pub fn toy() -> Self {
        TrainConfig {
            dim: 16,
            layers: 4,
            delta: 2,
            aggregation: Aggregation::Pna,
            negatives: 32,
            epochs: 80,
            batch_size: 16,
            learning_rate: 1e-2,
            ..TrainConfig::default()
        }
    }

    pub const KEYS: [&'static str; 17] = [
        "dim",
        "layers",
        "delta",
        "aggregation",
        "attention",
        "share_attention",
        "temperature",
        "degree_messages",
        "negatives",
        "epochs",
        "batch_size",
        "learning_rate",
        "adversarial_temperature",
        "remove_query_edges",
        "seed",
        "dataset",
        "checkpoint",
    ];

    /// Parses a JSON object; missing keys take defaults, unknown keys are all reported.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("training config must be a JSON object".into()))?;
        let unknown: Vec<&str> = obj
            .keys()
            .map(String::as_str)
            .filter(|k| !Self::KEYS.contains(k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown config keys: {}", unknown.join(", "))));
        }
        let mut merged = serde_json::to_value(TrainConfig::default())?;
        for (k, v) in obj {
            merged[k] = v.clone();
        }
        let cfg: TrainConfig = serde_json::from_value(merged).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            dim: self.dim,
            layers: self.layers,
            delta: self.delta,
            aggregation: self.aggregation,
            attention: self.attention,
            share_attention: self.share_attention,
            temperature: self.temperature,
            degree_messages: self.degree_messages,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        if self.negatives == 0 {
            return Err(Error::Config("negatives must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Adam with the usual defaults.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// The two ranking queries of a triple: `(s, r, ?)` and `(o, r⁻¹, ?)`.
fn queries(graph: &KnowledgeGraph, t: &Triple) -> [(EntityId, RelationId, EntityId); 2] {
    [
        (t.subject, t.relation, t.object),
        (t.object, graph.reciprocal_relation(t.relation), t.subject),
    ]
}

/// True answers per `(source, query)` in both directions.
pub struct KnownAnswers(HashMap<(EntityId, RelationId), HashSet<EntityId>>);

impl KnownAnswers {
    pub fn new(graph: &KnowledgeGraph, triples: &[Triple]) -> Self {
        let mut map: HashMap<_, HashSet<_>> = HashMap::new();
        for t in triples {
            for (s, q, o) in queries(graph, t) {
                map.entry((s, q)).or_default().insert(o);
            }
        }
        KnownAnswers(map)
    }

    pub fn contains(&self, s: EntityId, q: RelationId, o: EntityId) -> bool {
        self.0.get(&(s, q)).is_some_and(|a| a.contains(&o))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RankingMetrics {
    pub queries: usize,
    pub mrr: f64,
    pub hits_at_1: f64,
    pub hits_at_10: f64,
}

/// Filtered rank of `answer`: other known answers are dropped and ties
/// count half, i.e. the mean of the optimistic and pessimistic ranks.
pub fn filtered_rank(scores: &[f64], answer: EntityId, is_known: impl Fn(EntityId) -> bool) -> f64 {
    let a = scores[answer.index()];
    let (mut greater, mut equal) = (0usize, 0usize);
    for (o, &x) in scores.iter().enumerate() {
        if o == answer.index() || is_known(EntityId(o as u32)) {
            continue;
        }
        if x > a {
            greater += 1;
        } else if x == a {
            equal += 1;
        }
    }
    1.0 + greater as f64 + equal as f64 / 2.0
}

/// MRR and Hits@{1,10} over head and tail queries of `eval`, filtered by
/// `known`. Each evaluated fact is hidden from propagation while it is
/// ranked, as during training.
pub fn rank_filtered(
    params: &ModelParams,
    graph: &KnowledgeGraph,
    eval: &[Triple],
    known: &[Triple],
) -> Result<RankingMetrics> {
    rank_filtered_with(params, graph, eval, known, true)
}

pub fn rank_filtered_with(
    params: &ModelParams,
    graph: &KnowledgeGraph,
    eval: &[Triple],
    known: &[Triple],
    hide_query_edges: bool,
) -> Result<RankingMetrics> {
    let answers = KnownAnswers::new(graph, known);
    let lookup = edge_lookup(graph);
    let ranks = eval
        .par_iter()
        .flat_map_iter(|t| {
            let removed = if hide_query_edges { fact_edges(&lookup, graph, t) } else { Vec::new() };
            queries(graph, t).map(move |q| (q, removed.clone()))
        })
        .map(|((s, q, o), removed)| {
            let scores = score_all(graph, s, q, params, removed)?;
            Ok(filtered_rank(&scores, o, |c| answers.contains(s, q, c)))
        })
        .collect::<Result<Vec<f64>>>()?;
    if ranks.is_empty() {
        return Ok(RankingMetrics::default());
    }
    let n = ranks.len() as f64;
    Ok(RankingMetrics {
        queries: ranks.len(),
        mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
        hits_at_1: ranks.iter().filter(|&&r| r <= 1.0).count() as f64 / n,
        hits_at_10: ranks.iter().filter(|&&r| r <= 10.0).count() as f64 / n,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub epoch_losses: Vec<f64>,
}

fn edge_lookup(graph: &KnowledgeGraph) -> HashMap<Triple, Vec<usize>> {
    let mut map: HashMap<Triple, Vec<usize>> = HashMap::new();
    for (i, e) in graph.edges().iter().enumerate() {
        map.entry(*e).or_default().push(i);
    }
    map
}

/// Edge indices of a fact and its reciprocal in the propagation graph.
fn fact_edges(lookup: &HashMap<Triple, Vec<usize>>, graph: &KnowledgeGraph, t: &Triple) -> Vec<usize> {
    [*t, graph.reciprocal_edge(t)]
        .iter()
        .flat_map(|e| lookup.get(e).into_iter().flatten().copied())
        .collect()
}

/// Trains on `train` over the propagation graph `graph` (reciprocals included).
/// Negatives are uniform corruptions of the answer that are not known true.
pub fn train_toy(graph: &KnowledgeGraph, train: &[Triple], known: &[Triple], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !graph.is_augmented() {
        return Err(Error::Precondition("training needs a graph with reciprocal edges".into()));
    }
    if graph.edge_count() > MAX_TRAIN_EDGES {
        return Err(Error::ResourceLimit(format!(
            "{} propagation edges exceed the CPU trainer's limit of {MAX_TRAIN_EDGES}",
            graph.edge_count()
        )));
    }
    if train.is_empty() {
        return Err(Error::Precondition("no training triples".into()));
    }
    let n = graph.entity_count();
    if n < 2 {
        return Err(Error::Precondition("need at least two entities to draw negatives".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = ModelParams::init(cfg.model(), graph.relation_count(), &mut rng)?;
    let mut adam = Adam::new(params.len(), cfg.learning_rate);
    let answers = KnownAnswers::new(graph, known);
    let lookup = edge_lookup(graph);
    let mut items: Vec<(EntityId, RelationId, EntityId, Vec<usize>)> = Vec::new();
    for t in train {
        let removed = if cfg.remove_query_edges { fact_edges(&lookup, graph, t) } else { Vec::new() };
        for (s, q, o) in queries(graph, t) {
            items.push((s, q, o, removed.clone()));
        }
    }

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        items.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in items.chunks(cfg.batch_size) {
            let batch: Vec<TrainingExample> = chunk
                .iter()
                .map(|(s, q, o, removed)| {
                    let mut negatives = Vec::with_capacity(cfg.negatives);
                    let mut tries = 0;
                    while negatives.len() < cfg.negatives && tries < 100 * cfg.negatives {
                        tries += 1;
                        let c = EntityId(rng.gen_range(0..n as u32));
                        if c != *o && !answers.contains(*s, *q, c) {
                            negatives.push(c);
                        }
                    }
                    if negatives.is_empty() {
                        negatives.push(if o.0 == 0 { EntityId(1) } else { EntityId(0) });
                    }
                    TrainingExample {
                        source: *s,
                        query: *q,
                        positive: *o,
                        negatives,
                        removed: removed.clone(),
                    }
                })
                .collect();
            let (loss, grad) = loss_and_grad(graph, &batch, &params, cfg.adversarial_temperature)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("epoch {epoch}: loss {loss}")));
            }
            adam.step(&mut params.data, &grad);
            params
                .check_finite()
                .map_err(|e| Error::Divergence(format!("epoch {epoch}: {e}")))?;
            total += loss * chunk.len() as f64;
        }
        epoch_losses.push(total / items.len() as f64);
    }
    Ok(TrainOutcome { params, epoch_losses })
}

/// Propagation graph plus all known facts of a split dataset.
pub fn training_view(ds: &SplitDataset) -> Result<(KnowledgeGraph, Vec<Triple>)> {
    let graph = ds.graph.augment_reciprocal()?;
    let known = ds.train.iter().chain(&ds.valid).chain(&ds.test).copied().collect();
    Ok((graph, known))
}
