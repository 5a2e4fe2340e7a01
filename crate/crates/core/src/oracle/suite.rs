//! Randomized equivalence suite: truncated engine vs. walk enumeration.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kg::{bfs_distances, EntityId, KnowledgeGraph, RelationId, Triple};
use crate::semiring::{generalized_bellman_ford, Katz, MinDist, PathCount, Semiring};
use crate::truncated::{
    count_messages, ConstraintContext, TruncatedOptions, Window, WindowRule,
};

use super::WalkEnumerator;

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub graphs: usize,
    pub max_nodes: usize,
    pub max_edges: usize,
    pub relations: u32,
    pub deltas: Vec<u32>,
    pub seed: u64,
    pub katz_tolerance: f64,
    pub rule: WindowRule,
    pub enumerator: WalkEnumerator,
    /// Redraws allowed per trial when enumeration exceeds its budget.
    pub max_redraws: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            graphs: 500,
            max_nodes: 10,
            max_edges: 30,
            relations: 3,
            deltas: vec![0, 1, 2, 3],
            seed: 0,
            katz_tolerance: 1e-9,
            rule: WindowRule::Standard,
            enumerator: WalkEnumerator {
                length_cap: 16,
                walk_budget: 400_000,
            },
            max_redraws: 64,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub check: &'static str,
    pub semiring: &'static str,
    pub nodes: usize,
    pub edges: Vec<(u32, u32, u32)>,
    pub source: u32,
    pub target: u32,
    pub delta: u32,
    pub layers: usize,
    pub expected: String,
    pub got: String,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "[{}] {} mismatch: source {} target {} δ={} T={}: expected {}, got {}",
            self.check, self.semiring, self.source, self.target, self.delta, self.layers, self.expected, self.got
        )?;
        write!(f, "  graph: {} nodes, edges (s, r, o) = {:?}", self.nodes, self.edges)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteReport {
    pub graphs_checked: usize,
    pub graphs_redrawn: usize,
    pub sources_checked: u64,
    /// Engine-vs-enumeration value comparisons (window equivalence).
    pub window_comparisons: u64,
    /// Truncated (δ ≥ T) vs. unconstrained comparisons.
    pub unconstrained_comparisons: u64,
    pub bound_checks: u64,
    pub layer_independence_checks: u64,
    pub failure_count: u64,
    /// Failure counts keyed by check name.
    pub failures_by_check: BTreeMap<&'static str, u64>,
    pub failures: Vec<Counterexample>,
    pub max_katz_error: f64,
    pub max_nodes_seen: usize,
    pub max_edges_seen: usize,
    pub elapsed_ms: u128,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }

    pub fn failures_of(&self, check: &str) -> u64 {
        self.failures_by_check.get(check).copied().unwrap_or(0)
    }

    fn absorb(&mut self, o: SuiteReport) {
        self.graphs_checked += o.graphs_checked;
        self.graphs_redrawn += o.graphs_redrawn;
        self.sources_checked += o.sources_checked;
        self.window_comparisons += o.window_comparisons;
        self.unconstrained_comparisons += o.unconstrained_comparisons;
        self.bound_checks += o.bound_checks;
        self.layer_independence_checks += o.layer_independence_checks;
        self.failure_count += o.failure_count;
        for (k, v) in o.failures_by_check {
            *self.failures_by_check.entry(k).or_default() += v;
        }
        self.max_katz_error = self.max_katz_error.max(o.max_katz_error);
        self.max_nodes_seen = self.max_nodes_seen.max(o.max_nodes_seen);
        self.max_edges_seen = self.max_edges_seen.max(o.max_edges_seen);
        for c in o.failures {
            if self.failures.len() < 20 {
                self.failures.push(c);
            }
        }
    }

    fn fail(&mut self, c: Counterexample) {
        self.failure_count += 1;
        *self.failures_by_check.entry(c.check).or_default() += 1;
        if self.failures.len() < 20 {
            self.failures.push(c);
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> KnowledgeGraph {
    let n = rng.gen_range(1..=cfg.max_nodes);
    let m = rng.gen_range(0..=cfg.max_edges);
    let edges = (0..m)
        .map(|_| {
            Triple::new(
                rng.gen_range(0..n as u32),
                rng.gen_range(0..cfg.relations),
                rng.gen_range(0..n as u32),
            )
        })
        .collect();
    KnowledgeGraph::new(n, cfg.relations as usize, edges).expect("ids in range")
}

struct GraphCase<'a> {
    graph: &'a KnowledgeGraph,
    cfg: &'a SuiteConfig,
    extra: &'a [usize],
    unconstrained_layers: &'a [usize],
}

impl GraphCase<'_> {
    #[allow(clippy::too_many_arguments)]
    fn counterexample<V: fmt::Display>(
        &self,
        check: &'static str,
        semiring: &'static str,
        s: EntityId,
        o: EntityId,
        delta: u32,
        layers: usize,
        expected: &V,
        got: &V,
    ) -> Counterexample {
        Counterexample {
            check,
            semiring,
            nodes: self.graph.entity_count(),
            edges: self
                .graph
                .edges()
                .iter()
                .map(|e| (e.subject.0, e.relation.0, e.object.0))
                .collect(),
            source: s.0,
            target: o.0,
            delta,
            layers,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Oracle walk tables for every source, or `None` if the budget is exceeded.
    fn tables<S: Semiring>(&self, semiring: &S, query: RelationId) -> Result<Option<Vec<super::WalkTable<S::Value>>>> {
        let max_delta = self.cfg.deltas.iter().copied().max().unwrap_or(0) as usize;
        let mut out = Vec::new();
        for s in self.graph.entities() {
            let maxd = bfs_distances(self.graph, s)?.max_finite() as usize;
            let len = (maxd + max_delta + 1).max(1);
            match self.cfg.enumerator.walk_table(self.graph, s, query, semiring, len) {
                Ok(t) => out.push(t),
                Err(Error::ResourceLimit(_)) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(Some(out))
    }

    fn check<S: Semiring>(
        &self,
        semiring: &S,
        query: RelationId,
        tables: &[super::WalkTable<S::Value>],
        report: &mut SuiteReport,
    ) -> Result<()> {
        let g = self.graph;
        for s in g.entities() {
            let table = &tables[s.index()];
            let dist = bfs_distances(g, s)?;
            let maxd = dist.max_finite() as usize;
            for o in g.entities() {
                let by_walks = table.shortest(o);
                if by_walks != dist.get(o).map(|d| d as usize) {
                    report.fail(Counterexample {
                        check: "bfs-vs-walks",
                        semiring: semiring.name(),
                        nodes: g.entity_count(),
                        edges: Vec::new(),
                        source: s.0,
                        target: o.0,
                        delta: 0,
                        layers: 0,
                        expected: format!("{by_walks:?}"),
                        got: format!("{:?}", dist.get(o)),
                    });
                }
            }

            for (k, &delta) in self.cfg.deltas.iter().enumerate() {
                let layers = (maxd + delta as usize + self.extra[k]).max(1);
                let ctx = ConstraintContext::new(g, s, Window::new(delta))?.with_rule(self.cfg.rule);
                let run = crate::truncated::truncated_with_context(&ctx, query, semiring, TruncatedOptions::new(layers, delta))?;
                report.bound_checks += 1;
                if run.trace.check_update_bound(delta).is_err() || !run.trace.accounting_balances() {
                    report.fail(self.counterexample(
                        "update-bound",
                        semiring.name(),
                        s,
                        s,
                        delta,
                        layers,
                        &format!("≤ {} updates, balanced accounting", delta + 1),
                        &format!(
                            "{} node / {} edge updates",
                            run.trace.max_node_updates(),
                            run.trace.max_edge_aggregations()
                        ),
                    ));
                }
                for o in g.entities() {
                    let expected = match dist.get(o) {
                        Some(d) => {
                            let d = d as usize;
                            let hi = (d + delta as usize).min(table.sums[o.index()].len() - 1);
                            table.window_sum(semiring, o, d, hi)
                        }
                        None => semiring.zero(),
                    };
                    let got = &run.values[o.index()];
                    report.window_comparisons += 1;
                    if !semiring.approx_eq(&expected, got, self.cfg.katz_tolerance) {
                        report.fail(self.counterexample("window", semiring.name(), s, o, delta, layers, &expected, got));
                    }
                    if semiring.name() == "katz" {
                        let e: f64 = expected.to_string().parse().unwrap_or(0.0);
                        let v: f64 = got.to_string().parse().unwrap_or(0.0);
                        report.max_katz_error = report.max_katz_error.max((e - v).abs());
                    }
                }
            }

            // δ ≥ T: the window never closes, so values match the unconstrained recursion.
            let layers = self.unconstrained_layers[s.index()];
            let run = crate::truncated::truncated_bellman_ford(g, s, query, semiring, TruncatedOptions::new(layers, layers as u32))?;
            let gbf = generalized_bellman_ford(g, s, query, semiring, layers)?;
            for o in g.entities() {
                report.unconstrained_comparisons += 1;
                let (a, b) = (&gbf[layers].values[o.index()], &run.values[o.index()]);
                if a != b {
                    report.fail(self.counterexample("unconstrained", semiring.name(), s, o, layers as u32, layers, a, b));
                }
            }
        }
        Ok(())
    }

    fn check_layer_independence(&self, report: &mut SuiteReport) -> Result<()> {
        let g = self.graph;
        for s in g.entities() {
            let maxd = bfs_distances(g, s)?.max_finite() as usize;
            for &delta in &self.cfg.deltas {
                let base = (maxd + delta as usize).max(1);
                let counts: Vec<u64> = (base..=base + 4)
                    .map(|t| count_messages(g, s, TruncatedOptions::new(t, delta)).map(|tr| tr.totals.edge_aggregations))
                    .collect::<Result<_>>()?;
                report.layer_independence_checks += 1;
                if counts.windows(2).any(|w| w[0] != w[1]) {
                    report.fail(self.counterexample(
                        "layer-independence",
                        "schedule",
                        s,
                        s,
                        delta,
                        base,
                        &counts[0],
                        counts.iter().find(|&&c| c != counts[0]).unwrap(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn run_trial(cfg: &SuiteConfig, trial: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut report = SuiteReport::default();
    for _ in 0..=cfg.max_redraws {
        let g = random_graph(&mut rng, cfg);
        let query = RelationId(rng.gen_range(0..cfg.relations));
        let katz = Katz {
            beta: rng.gen_range(0.05..0.5),
        };
        let extra: Vec<usize> = cfg.deltas.iter().map(|_| rng.gen_range(0..=1)).collect();
        let max_delta = cfg.deltas.iter().copied().max().unwrap_or(0) as usize;
        let unconstrained_layers: Vec<usize> = g
            .entities()
            .map(|_| rng.gen_range(1..=max_delta + 3))
            .collect();
        let case = GraphCase {
            graph: &g,
            cfg,
            extra: &extra,
            unconstrained_layers: &unconstrained_layers,
        };
        let (Some(pc), Some(md), Some(kz)) = (
            case.tables(&PathCount, query)?,
            case.tables(&MinDist, query)?,
            case.tables(&katz, query)?,
        ) else {
            report.graphs_redrawn += 1;
            continue;
        };
        case.check(&PathCount, query, &pc, &mut report)?;
        case.check(&MinDist, query, &md, &mut report)?;
        case.check(&katz, query, &kz, &mut report)?;
        case.check_layer_independence(&mut report)?;
        report.graphs_checked = 1;
        report.sources_checked = g.entity_count() as u64;
        report.max_nodes_seen = g.entity_count();
        report.max_edges_seen = g.edge_count();
        return Ok(report);
    }
    Err(Error::ResourceLimit(format!(
        "trial {trial}: no graph within the walk budget after {} redraws",
        cfg.max_redraws
    )))
}

/// Draws `cfg.graphs` random multigraphs and checks, for every source and
/// every `δ`, that truncated propagation equals the windowed walk sum, that
/// `δ ≥ T` reproduces unconstrained propagation, and that the update bound
/// and layer independence hold.
pub fn run_theorem_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let start = Instant::now();
    let parts = (0..cfg.graphs)
        .into_par_iter()
        .map(|i| run_trial(cfg, i))
        .collect::<Result<Vec<_>>>()?;
    let mut report = SuiteReport::default();
    for p in parts {
        report.absorb(p);
    }
    report.elapsed_ms = start.elapsed().as_millis();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = SuiteConfig {
            graphs: 20,
            ..SuiteConfig::default()
        };
        let r = run_theorem_suite(&cfg).unwrap();
        assert!(r.passed(), "{}", r.failures.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("\n"));
        assert_eq!(r.graphs_checked, 20);
        assert!(r.window_comparisons > 0);
    }

    #[test]
    fn off_by_one_window_is_caught() {
        let cfg = SuiteConfig {
            graphs: 20,
            rule: WindowRule::InjectedOffByOne,
            ..SuiteConfig::default()
        };
        let r = run_theorem_suite(&cfg).unwrap();
        assert!(!r.passed());
        assert!(r.failures.iter().any(|c| c.check == "window"));
    }

    #[test]
    fn zero_trials_is_vacuous() {
        let r = run_theorem_suite(&SuiteConfig {
            graphs: 0,
            ..SuiteConfig::default()
        })
        .unwrap();
        assert!(r.passed());
        assert_eq!(r.graphs_checked, 0);
    }
}
