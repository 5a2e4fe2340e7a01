use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kg::{DistanceMap, EntityId, KnowledgeGraph, RelationId};
use crate::truncated::{ConstraintContext, LayerVisitor, PropagationTrace, Schedule, Window};

use super::params::{Aggregation, AttentionMode, MlpLayout, ModelParams};
use super::tape::{sigmoid, NodeId, Tape};

/// DistMult message: componentwise product.
pub fn message(sender: &[f64], relation: &[f64]) -> Result<Vec<f64>> {
    if sender.len() != relation.len() {
        return Err(Error::Dimension {
            expected: sender.len(),
            got: relation.len(),
        });
    }
    Ok(sender.iter().zip(relation).map(|(a, b)| a * b).collect())
}

pub(crate) fn aggregate_on(
    tape: &mut Tape<'_>,
    mut items: Vec<NodeId>,
    self_term: NodeId,
    kind: Aggregation,
    pna: Option<(usize, usize)>,
) -> NodeId {
    items.push(self_term);
    match kind {
        Aggregation::Sum => tape.add(items),
        Aggregation::Max => tape.max(items),
        Aggregation::Min => tape.min(items),
        Aggregation::Pna => {
            let d = tape.value(self_term).len();
            let stats = vec![
                tape.mean(items.clone()),
                tape.max(items.clone()),
                tape.min(items.clone()),
                tape.std(items),
            ];
            let cat = tape.concat(stats);
            let (w, b) = pna.expect("pna parameters");
            tape.linear(w, b, d, cat)
        }
    }
}

/// Aggregates `messages ∪ {self_term}`. PNA takes its linear map as
/// `(weight, bias)` with shapes `d × 4d` and `d`.
pub fn aggregate(messages: &[Vec<f64>], self_term: &[f64], kind: Aggregation, pna: Option<(&[f64], &[f64])>) -> Result<Vec<f64>> {
    let d = self_term.len();
    if let Some(m) = messages.iter().find(|m| m.len() != d) {
        return Err(Error::Dimension { expected: d, got: m.len() });
    }
    let mut buf = Vec::new();
    let offsets = match (kind, pna) {
        (Aggregation::Pna, Some((w, b))) => {
            if w.len() != 4 * d * d || b.len() != d {
                return Err(Error::Dimension {
                    expected: 4 * d * d + d,
                    got: w.len() + b.len(),
                });
            }
            buf.extend_from_slice(w);
            buf.extend_from_slice(b);
            Some((0, w.len()))
        }
        (Aggregation::Pna, None) => return Err(Error::Precondition("pna aggregation needs its linear map".into())),
        _ => None,
    };
    let mut tape = Tape::new(&buf);
    let items = messages.iter().map(|m| tape.constant(m.clone())).collect();
    let s = tape.constant(self_term.to_vec());
    let out = aggregate_on(&mut tape, items, s, kind, offsets);
    Ok(tape.value(out).to_vec())
}

/// Tape nodes produced by one forward pass from a source.
pub struct ForwardPass {
    pub source: EntityId,
    pub query: RelationId,
    /// Window states per target, offset 0 first; empty if never scheduled.
    pub hiddens: Vec<Vec<NodeId>>,
    pub trace: PropagationTrace,
    pub distances: DistanceMap,
    pub(crate) zero: NodeId,
    pub(crate) query_embedding: NodeId,
}

struct NeuralVisitor<'a, 'p> {
    tape: &'a mut Tape<'p>,
    params: &'a ModelParams,
    graph: &'a KnowledgeGraph,
    states: Vec<NodeId>,
    boundary: Vec<NodeId>,
    hiddens: Vec<Vec<NodeId>>,
    pending: Vec<(usize, NodeId)>,
    zero: NodeId,
    skip_empty_senders: bool,
}

impl LayerVisitor for NeuralVisitor<'_, '_> {
    fn update(&mut self, layer: usize, o: EntityId, admitted: &[usize], rho: usize) -> Result<()> {
        let p = self.params;
        let d = p.config.dim;
        let mut messages = Vec::with_capacity(admitted.len() + 1);
        for &i in admitted {
            let e = self.graph.edge(i);
            let h = self.states[e.subject.index()];
            if self.skip_empty_senders && h == self.zero {
                continue;
            }
            let r = self.tape.param(p.relation_offset(layer, e.relation.index()), d);
            messages.push(self.tape.mul(h, r));
        }
        if p.config.degree_messages && rho > 0 {
            let deg = self.tape.param(p.degree_offset(layer), d);
            messages.push(self.tape.scale(deg, rho as f64));
        }
        let pna = (p.config.aggregation == Aggregation::Pna).then(|| p.pna_offsets(layer));
        let out = aggregate_on(self.tape, messages, self.boundary[o.index()], p.config.aggregation, pna);
        if let Some(x) = self.tape.value(out).iter().find(|x| !x.is_finite()) {
            return Err(Error::Numeric {
                layer,
                node: o.index(),
                message: format!("state component {x}"),
            });
        }
        self.pending.push((o.index(), out));
        Ok(())
    }

    fn end_layer(&mut self, _: usize) -> Result<()> {
        for (o, v) in self.pending.drain(..) {
            self.states[o] = v;
            self.hiddens[o].push(v);
        }
        Ok(())
    }
}

/// Source row of the initial state: the query embedding at `s`, zero elsewhere.
pub fn indicator_init(params: &ModelParams, n: usize, source: EntityId, query: RelationId) -> Result<Vec<Vec<f64>>> {
    if source.index() >= n {
        return Err(Error::Bounds {
            kind: "entity",
            index: source.index(),
            size: n,
        });
    }
    if query.index() >= params.relations {
        return Err(Error::Bounds {
            kind: "relation",
            index: query.index(),
            size: params.relations,
        });
    }
    let d = params.config.dim;
    let mut out = vec![vec![0.0; d]; n];
    let q = params.query_offset(query.index());
    out[source.index()].copy_from_slice(&params.data[q..q + d]);
    Ok(out)
}

pub(crate) fn forward_with(
    tape: &mut Tape<'_>,
    ctx: &ConstraintContext<'_>,
    query: RelationId,
    params: &ModelParams,
    skip_empty_senders: bool,
) -> Result<ForwardPass> {
    let graph = ctx.graph();
    let cfg = &params.config;
    if graph.relation_count() != params.relations {
        return Err(Error::Dimension {
            expected: params.relations,
            got: graph.relation_count(),
        });
    }
    graph.check_relation(query)?;
    let n = graph.entity_count();
    let source = ctx.source();
    let zero = tape.constant(vec![0.0; cfg.dim]);
    let q = tape.param(params.query_offset(query.index()), cfg.dim);
    let mut boundary = vec![zero; n];
    boundary[source.index()] = q;
    let mut hiddens = vec![Vec::new(); n];
    hiddens[source.index()].push(q);
    let mut visitor = NeuralVisitor {
        tape,
        params,
        graph,
        states: boundary.clone(),
        boundary,
        hiddens,
        pending: Vec::new(),
        zero,
        skip_empty_senders,
    };
    let trace = Schedule {
        ctx,
        layers: cfg.layers,
        mask: None,
        degree_messages: cfg.degree_messages,
    }
    .run(&mut visitor)?;
    Ok(ForwardPass {
        source,
        query,
        hiddens: visitor.hiddens,
        trace,
        distances: ctx.distances().clone(),
        zero,
        query_embedding: q,
    })
}

/// Runs the truncated schedule with neural messages on the graph minus `removed`.
pub fn forward(
    tape: &mut Tape<'_>,
    graph: &KnowledgeGraph,
    source: EntityId,
    query: RelationId,
    params: &ModelParams,
    removed: Vec<usize>,
) -> Result<ForwardPass> {
    let ctx = ConstraintContext::excluding(graph, source, Window::new(params.config.delta), removed)?;
    forward_with(tape, &ctx, query, params, false)
}

fn mlp(tape: &mut Tape<'_>, m: MlpLayout, x: NodeId) -> NodeId {
    let h = tape.linear(m.w1, m.b1, m.hidden, x);
    let h = tape.relu(h);
    tape.linear(m.w2, m.b2, 1, h)
}

/// Softmax-weighted mix of the window states.
pub fn attention_final(tape: &mut Tape<'_>, hiddens: &[NodeId], query: NodeId, params: &ModelParams) -> Result<NodeId> {
    if hiddens.is_empty() {
        return Err(Error::Domain("attention over an empty window".into()));
    }
    let g = params.attention_mlp();
    let scores = hiddens
        .iter()
        .map(|&h| {
            let x = tape.concat(vec![h, query]);
            mlp(tape, g, x)
        })
        .collect();
    let stacked = tape.concat(scores);
    let alpha = tape.softmax(stacked, params.config.temperature);
    Ok(tape.mix(alpha, hiddens.to_vec()))
}

impl ForwardPass {
    /// `x^F(s, o)`; zero for targets never scheduled.
    pub fn final_state(&self, tape: &mut Tape<'_>, o: EntityId, params: &ModelParams) -> Result<NodeId> {
        let hs = &self.hiddens[o.index()];
        match (hs.last(), params.config.attention) {
            (None, _) => Ok(self.zero),
            (Some(&h), AttentionMode::Fixed) => Ok(h),
            (Some(_), AttentionMode::Specific) => attention_final(tape, hs, self.query_embedding, params),
        }
    }

    /// Pre-sigmoid score `f(x^F, x_q)`.
    pub fn logit(&self, tape: &mut Tape<'_>, o: EntityId, params: &ModelParams) -> Result<NodeId> {
        let xf = self.final_state(tape, o, params)?;
        Ok(score_logit(tape, xf, self.query_embedding, params))
    }
}

pub fn score_logit(tape: &mut Tape<'_>, pair_final: NodeId, query: NodeId, params: &ModelParams) -> NodeId {
    let x = tape.concat(vec![pair_final, query]);
    mlp(tape, params.score_mlp(), x)
}

/// Probability `sigmoid(f(x^F, x_q))`.
pub fn score(pair_final: &[f64], query: &[f64], params: &ModelParams) -> Result<f64> {
    let d = params.config.dim;
    for v in [pair_final, query] {
        if v.len() != d {
            return Err(Error::Dimension { expected: d, got: v.len() });
        }
    }
    let mut tape = Tape::new(&params.data);
    let a = tape.constant(pair_final.to_vec());
    let b = tape.constant(query.to_vec());
    let z = score_logit(&mut tape, a, b, params);
    Ok(sigmoid(tape.value(z)[0]))
}

/// Probabilities for every target entity from `(source, query)`.
pub fn score_all(
    graph: &KnowledgeGraph,
    source: EntityId,
    query: RelationId,
    params: &ModelParams,
    removed: Vec<usize>,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new(&params.data);
    let pass = forward(&mut tape, graph, source, query, params, removed)?;
    graph
        .entities()
        .map(|o| {
            let z = pass.logit(&mut tape, o, params)?;
            Ok(sigmoid(tape.value(z)[0]))
        })
        .collect()
}

/// One positive target and its corruptions for a `(source, query)` pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub source: EntityId,
    pub query: RelationId,
    pub positive: EntityId,
    pub negatives: Vec<EntityId>,
    /// Edges hidden from propagation, typically the queried fact and its reciprocal.
    pub removed: Vec<usize>,
}

fn example_loss(
    graph: &KnowledgeGraph,
    ex: &TrainingExample,
    params: &ModelParams,
    adversarial_temperature: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    if ex.negatives.is_empty() {
        return Err(Error::Precondition("each positive needs at least one negative".into()));
    }
    let mut tape = Tape::new(&params.data);
    let pass = forward(&mut tape, graph, ex.source, ex.query, params, ex.removed.clone())?;
    let pos = pass.logit(&mut tape, ex.positive, params)?;
    let neg = ex
        .negatives
        .iter()
        .map(|&o| pass.logit(&mut tape, o, params))
        .collect::<Result<Vec<_>>>()?;
    let k = neg.len() as f64;
    // self-adversarial weights are constants of the backward pass
    let weights: Vec<f64> = match adversarial_temperature {
        Some(a) => {
            let z: Vec<f64> = neg.iter().map(|&n| tape.value(n)[0] * a).collect();
            let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|x| x / s).collect()
        }
        None => vec![1.0 / k; neg.len()],
    };
    let mut terms = vec![tape.bce_with_logit(pos, 1.0, 0.5)];
    for (&n, w) in neg.iter().zip(weights) {
        terms.push(tape.bce_with_logit(n, 0.0, 0.5 * w));
    }
    let loss = tape.add(terms);
    let value = tape.value(loss)[0];
    if !value.is_finite() {
        return Err(Error::Numeric {
            layer: params.config.layers,
            node: ex.positive.index(),
            message: format!("loss {value}"),
        });
    }
    Ok((value, tape.backward(loss)))
}

/// Mean over the batch of `(BCE(pos) + Σ w_i BCE(neg_i)) / 2` and its gradient.
pub fn loss_and_grad(
    graph: &KnowledgeGraph,
    batch: &[TrainingExample],
    params: &ModelParams,
    adversarial_temperature: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Precondition("empty batch".into()));
    }
    let parts = batch
        .par_iter()
        .map(|ex| example_loss(graph, ex, params, adversarial_temperature))
        .collect::<Result<Vec<_>>>()?;
    let n = batch.len() as f64;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Triple;
    use crate::neural::params::ModelConfig;
    use crate::oracle::WalkEnumerator;
    use crate::semiring::PathCount;
    use crate::truncated::count_messages;
    use crate::truncated::TruncatedOptions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn graph() -> KnowledgeGraph {
        KnowledgeGraph::new(
            6,
            2,
            vec![
                Triple::new(0, 0, 1),
                Triple::new(1, 1, 2),
                Triple::new(0, 1, 3),
                Triple::new(3, 0, 2),
                Triple::new(2, 0, 4),
                Triple::new(4, 1, 0),
            ],
        )
        .unwrap()
        .augment_reciprocal()
        .unwrap()
    }

    fn params(cfg: ModelConfig, seed: u64) -> ModelParams {
        ModelParams::init(cfg, 4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn message_examples() {
        assert_eq!(message(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
        assert_eq!(message(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(message(&[5.0, -2.0], &[1.0, 1.0]).unwrap(), vec![5.0, -2.0]);
        assert!(matches!(message(&[1.0], &[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[], &[1.0, 2.0], Aggregation::Sum, None).unwrap(), vec![1.0, 2.0]);
        assert_eq!(
            aggregate(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], Aggregation::Max, None).unwrap(),
            vec![1.0, 1.0]
        );
        assert_eq!(
            aggregate(&[vec![1.0, 3.0]], &[2.0, -1.0], Aggregation::Min, None).unwrap(),
            vec![1.0, -1.0]
        );
        // identity-like map picking the std block out of [mean,max,min,std]
        let d = 2;
        let mut w = vec![0.0; 4 * d * d];
        w[6] = 1.0;
        w[4 * d + 7] = 1.0;
        let out = aggregate(&[vec![1.5, -2.0], vec![1.5, -2.0]], &[1.5, -2.0], Aggregation::Pna, Some((&w, &[0.0, 0.0]))).unwrap();
        assert!(out.iter().all(|x| x.abs() < 1e-3), "{out:?}");
    }

    #[test]
    fn indicator_is_nonzero_only_at_source() {
        let p = params(ModelConfig::default(), 1);
        let x = indicator_init(&p, 6, EntityId(2), RelationId(1)).unwrap();
        for (o, v) in x.iter().enumerate() {
            assert_eq!(o == 2, v.iter().any(|c| *c != 0.0));
        }
        let y = indicator_init(&p, 6, EntityId(2), RelationId(0)).unwrap();
        assert_ne!(x[2], y[2]);
    }

    #[test]
    fn zero_params_stay_finite_and_score_half() {
        let p = ModelParams::zeros(ModelConfig::default(), 4).unwrap();
        let probs = score_all(&graph(), EntityId(0), RelationId(0), &p, vec![]).unwrap();
        assert!(probs.iter().all(|&x| (x - 0.5).abs() < 1e-12));
        assert!((score(&[0.0; 16], &[0.0; 16], &p).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trace_matches_semiring_schedule() {
        let g = graph();
        let p = params(ModelConfig::default(), 2);
        let mut tape = Tape::new(&p.data);
        let pass = forward(&mut tape, &g, EntityId(0), RelationId(0), &p, vec![]).unwrap();
        let t = count_messages(&g, EntityId(0), TruncatedOptions::new(4, 2).with_degree_messages(true)).unwrap();
        assert_eq!(pass.trace.totals, t.totals);
        assert_eq!(pass.trace.layers, t.layers);
    }

    #[test]
    fn window_hiddens_have_expected_length() {
        let g = graph();
        for delta in 0..3u32 {
            let cfg = ModelConfig {
                delta,
                ..ModelConfig::default()
            };
            let p = params(cfg.clone(), 3);
            let mut tape = Tape::new(&p.data);
            let pass = forward(&mut tape, &g, EntityId(0), RelationId(0), &p, vec![]).unwrap();
            for o in g.entities() {
                let want = match pass.distances.get(o) {
                    Some(d) if (d as usize) <= cfg.layers => {
                        (d as usize + delta as usize).min(cfg.layers) - d as usize + 1
                    }
                    _ => 0,
                };
                assert_eq!(pass.hiddens[o.index()].len(), want, "o={o:?} δ={delta}");
            }
        }
    }

    #[test]
    fn far_targets_have_zero_final_state() {
        let g = KnowledgeGraph::new(6, 1, (0..5).map(|i| Triple::new(i, 0, i + 1)).collect())
            .unwrap()
            .augment_reciprocal()
            .unwrap();
        let cfg = ModelConfig {
            layers: 3,
            delta: 0,
            ..ModelConfig::default()
        };
        let p = ModelParams::init(cfg, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut tape = Tape::new(&p.data);
        let pass = forward(&mut tape, &g, EntityId(0), RelationId(0), &p, vec![]).unwrap();
        for o in 4..6 {
            let x = pass.final_state(&mut tape, EntityId(o), &p).unwrap();
            assert!(tape.value(x).iter().all(|c| *c == 0.0));
        }
    }

    #[test]
    fn support_follows_windowed_walks() {
        let g = graph();
        let en = WalkEnumerator::default();
        for delta in 0..3u32 {
            let cfg = ModelConfig {
                delta,
                degree_messages: false,
                ..ModelConfig::default()
            };
            let p = params(cfg.clone(), 4);
            let mut tape = Tape::new(&p.data);
            for s in g.entities() {
                let pass = forward(&mut tape, &g, s, RelationId(0), &p, vec![]).unwrap();
                let table = en.walk_table(&g, s, RelationId(0), &PathCount, cfg.layers + 1).unwrap();
                for o in g.entities() {
                    let x = pass.final_state(&mut tape, o, &p).unwrap();
                    let nonzero = tape.value(x).iter().any(|c| *c != 0.0);
                    let walks = match pass.distances.get(o) {
                        Some(d) if d as usize <= cfg.layers => {
                            let hi = (d as usize + delta as usize).min(cfg.layers);
                            table.window_sum(&PathCount, o, d as usize, hi) > 0u32.into()
                        }
                        _ => false,
                    };
                    assert!(!nonzero || walks, "s={s:?} o={o:?}");
                }
            }
        }
    }

    #[test]
    fn empty_senders_are_inert_under_sum() {
        let g = graph();
        let cfg = ModelConfig {
            degree_messages: false,
            ..ModelConfig::default()
        };
        let p = params(cfg, 5);
        for s in g.entities() {
            let ctx = ConstraintContext::new(&g, s, Window::new(2)).unwrap();
            let mut a = Tape::new(&p.data);
            let pa = forward_with(&mut a, &ctx, RelationId(1), &p, false).unwrap();
            let mut b = Tape::new(&p.data);
            let pb = forward_with(&mut b, &ctx, RelationId(1), &p, true).unwrap();
            for o in g.entities() {
                let xa = pa.final_state(&mut a, o, &p).unwrap();
                let xb = pb.final_state(&mut b, o, &p).unwrap();
                assert_eq!(a.value(xa), b.value(xb));
            }
        }
    }

    #[test]
    fn attention_properties() {
        let cfg = ModelConfig {
            attention: AttentionMode::Specific,
            ..ModelConfig::default()
        };
        let mut p = params(cfg, 6);
        let d = p.config.dim;
        let h: Vec<Vec<f64>> = (0..3).map(|k| (0..d).map(|j| (k * d + j) as f64 * 0.1 - 1.0).collect()).collect();
        let qv = vec![0.3; d];

        let mut tape = Tape::new(&p.data);
        let q = tape.constant(qv.clone());
        let one = tape.constant(h[0].clone());
        let x = attention_final(&mut tape, &[one], q, &p).unwrap();
        assert_eq!(tape.value(x), &h[0][..]);
        let same: Vec<_> = (0..3).map(|_| tape.constant(h[1].clone())).collect();
        let x = attention_final(&mut tape, &same, q, &p).unwrap();
        assert!(tape.value(x).iter().zip(&h[1]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert!(matches!(attention_final(&mut tape, &[], q, &p), Err(Error::Domain(_))));

        // convexity: each component between the window's min and max
        let hs: Vec<_> = h.iter().map(|v| tape.constant(v.clone())).collect();
        let x = attention_final(&mut tape, &hs, q, &p).unwrap();
        for j in 0..d {
            let (lo, hi) = h.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v[j]), b.max(v[j])));
            assert!(tape.value(x)[j] >= lo - 1e-12 && tape.value(x)[j] <= hi + 1e-12);
        }

        // low temperature approaches hard selection of the best-scored hidden
        p.config.temperature = 1e-4;
        let mut tape = Tape::new(&p.data);
        let q = tape.constant(qv);
        let hs: Vec<_> = h.iter().map(|v| tape.constant(v.clone())).collect();
        let g = p.attention_mlp();
        let scores: Vec<f64> = hs
            .iter()
            .map(|&hn| {
                let c = tape.concat(vec![hn, q]);
                let z = mlp(&mut tape, g, c);
                tape.value(z)[0]
            })
            .collect();
        let best = (0..3).max_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap()).unwrap();
        let x = attention_final(&mut tape, &hs, q, &p).unwrap();
        assert!(tape.value(x).iter().zip(&h[best]).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn closed_form_losses() {
        let g = graph();
        let p = ModelParams::zeros(ModelConfig::default(), 4).unwrap();
        let ex = TrainingExample {
            source: EntityId(0),
            query: RelationId(0),
            positive: EntityId(1),
            negatives: vec![EntityId(2)],
            removed: vec![],
        };
        let (l, _) = loss_and_grad(&g, std::slice::from_ref(&ex), &p, None).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        let bad = TrainingExample {
            negatives: vec![],
            ..ex
        };
        assert!(matches!(loss_and_grad(&g, &[bad], &p, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn confident_correct_scores_have_near_zero_loss() {
        let g = graph();
        let mut p = ModelParams::zeros(ModelConfig::default(), 4).unwrap();
        // logit = 1000 · Σ relu(x^F) − 500; the negative is isolated, so its x^F is zero
        let m = p.score_mlp();
        let d = p.config.dim;
        for j in 0..d {
            p.data[m.w1 + j * 2 * d + j] = 1.0;
            p.data[m.w2 + j] = 1000.0;
        }
        p.data[m.b2] = -500.0;
        let q = p.query_offset(0);
        p.data[q..q + d].iter_mut().for_each(|x| *x = 1.0);
        for t in 1..=p.config.layers {
            let r = p.relation_offset(t, 0);
            p.data[r..r + d].iter_mut().for_each(|x| *x = 1.0);
        }
        let ex = TrainingExample {
            source: EntityId(0),
            query: RelationId(0),
            positive: EntityId(1),
            negatives: vec![EntityId(5)],
            removed: vec![],
        };
        let (l, _) = loss_and_grad(&g, &[ex], &p, None).unwrap();
        assert!(l < 1e-6, "{l}");
    }
}
