use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};

use super::model::{loss_and_grad, TrainingExample};
use super::params::{Aggregation, AttentionMode, ModelConfig, ModelParams};

/// Group norms below this are treated as this, so vanishing groups
/// compare on absolute error.
pub const NORM_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct GroupError {
    pub group: String,
    pub analytic_norm: f64,
    pub numeric_norm: f64,
    pub relative_error: f64,
}

/// Central differences `(L(θ + ε e_k) − L(θ − ε e_k)) / 2ε` against the
/// analytic gradient, per parameter group.
pub fn gradient_check(
    graph: &KnowledgeGraph,
    batch: &[TrainingExample],
    params: &ModelParams,
    eps: f64,
) -> Result<Vec<GroupError>> {
    let (_, analytic) = loss_and_grad(graph, batch, params, None)?;
    let mut numeric = vec![0.0; params.len()];
    let mut p = params.clone();
    for (k, slot) in numeric.iter_mut().enumerate() {
        let x = p.data[k];
        p.data[k] = x + eps;
        let (up, _) = loss_and_grad(graph, batch, &p, None)?;
        p.data[k] = x - eps;
        let (down, _) = loss_and_grad(graph, batch, &p, None)?;
        p.data[k] = x;
        *slot = (up - down) / (2.0 * eps);
    }
    Ok(params
        .groups
        .iter()
        .map(|g| {
            let (a, n) = (&analytic[g.range()], &numeric[g.range()]);
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = a.iter().zip(n).map(|(x, y)| x - y).collect();
            let (na, nn) = (norm(a), norm(n));
            GroupError {
                group: g.name.clone(),
                analytic_norm: na,
                numeric_norm: nn,
                relative_error: norm(&diff) / na.max(nn).max(NORM_FLOOR),
            }
        })
        .collect())
}

/// A random 5-node instance with `d = 4`; the model variant cycles with the
/// seed so that every parameter group is exercised.
pub fn random_instance(seed: u64) -> Result<(KnowledgeGraph, Vec<TrainingExample>, ModelParams)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 5u32;
    let m = rng.gen_range(6..=10);
    let edges = (0..m)
        .map(|_| Triple::new(rng.gen_range(0..n), rng.gen_range(0..2), rng.gen_range(0..n)))
        .collect();
    let graph = KnowledgeGraph::new(n as usize, 2, edges)?.augment_reciprocal()?;
    let aggregation = [Aggregation::Sum, Aggregation::Max, Aggregation::Min, Aggregation::Pna][seed as usize % 4];
    let (attention, share_attention) = [
        (AttentionMode::Fixed, false),
        (AttentionMode::Specific, false),
        (AttentionMode::Specific, true),
    ][(seed as usize / 4) % 3];
    let cfg = ModelConfig {
        dim: 4,
        layers: 3,
        delta: rng.gen_range(0..=2),
        aggregation,
        attention,
        share_attention,
        temperature: [0.5, 1.0, 5.0][seed as usize % 3],
        degree_messages: true,
    };
    let mut params = ModelParams::init(cfg, graph.relation_count(), &mut rng)?;
    for x in &mut params.data {
        *x += rng.gen_range(-0.2..0.2);
    }
    let batch = (0..2)
        .map(|k| {
            let source = EntityId(rng.gen_range(0..n));
            TrainingExample {
                source,
                query: RelationId(rng.gen_range(0..graph.relation_count() as u32)),
                positive: EntityId(rng.gen_range(0..n)),
                negatives: (0..2).map(|_| EntityId(rng.gen_range(0..n))).collect(),
                removed: if k == 0 { vec![0, graph.original_edge_count()] } else { vec![] },
            }
        })
        .collect();
    Ok((graph, batch, params))
}
