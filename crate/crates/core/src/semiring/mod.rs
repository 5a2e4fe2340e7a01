//! Path algebras and the unconstrained generalized Bellman-Ford recursion.
//!
//! A [`Semiring`] supplies the aggregation `⊕`, the path extension `⊗`,
//! their identities and the per-edge weight `w_q(e)`. Path information for
//! a pair `(s, o)` is the `⊕` over walks from `s` to `o` of the `⊗`-product
//! of edge weights.
//!
//! Personalized PageRank is not a built-in: its weights depend on node
//! degree, so it is expressed through [`CustomWeight`] with a closure that
//! looks up the degree.

mod bellman_ford;

pub use bellman_ford::{generalized_bellman_ford, LayerValues};

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{RelationId, Triple};

pub trait Semiring: Sync {
    type Value: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync;

    fn name(&self) -> &'static str;
    fn zero(&self) -> Self::Value;
    fn one(&self) -> Self::Value;
    fn combine(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn extend(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn edge_weight(&self, edge: &Triple, query: RelationId) -> Self::Value;

    fn combine_into(&self, acc: &mut Self::Value, x: &Self::Value) {
        *acc = self.combine(acc, x);
    }

    fn is_zero(&self, v: &Self::Value) -> bool {
        *v == self.zero()
    }

    /// Rejects values the carrier cannot represent faithfully.
    fn check(&self, _v: &Self::Value) -> Result<()> {
        Ok(())
    }

    /// Equality up to `tol` for float carriers; exact otherwise.
    fn approx_eq(&self, a: &Self::Value, b: &Self::Value, _tol: f64) -> bool {
        a == b
    }
}

/// `w_q(e)` for a semiring, as a free function.
pub fn eval_edge_weight<S: Semiring>(semiring: &S, edge: &Triple, query: RelationId) -> S::Value {
    semiring.edge_weight(edge, query)
}

/// Natural numbers with `∞`, ordered so that `∞` is largest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    Finite(u64),
    Infinite,
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Finite(n) => write!(f, "{n}"),
            ExtNat::Infinite => f.write_str("inf"),
        }
    }
}

/// Walk counting in exact arbitrary-precision integers: `(ℕ, +, ×, w = 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PathCount;

impl Semiring for PathCount {
    type Value = BigUint;

    fn name(&self) -> &'static str {
        "path-count"
    }
    fn zero(&self) -> BigUint {
        BigUint::zero()
    }
    fn one(&self) -> BigUint {
        BigUint::one()
    }
    fn combine(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a + b
    }
    fn extend(&self, a: &BigUint, b: &BigUint) -> BigUint {
        a * b
    }
    fn edge_weight(&self, _: &Triple, _: RelationId) -> BigUint {
        BigUint::one()
    }
    fn combine_into(&self, acc: &mut BigUint, x: &BigUint) {
        *acc += x;
    }
    fn is_zero(&self, v: &BigUint) -> bool {
        v.is_zero()
    }
}

/// Katz index: `(ℝ, +, ×, w = β)`.
#[derive(Debug, Clone, Copy)]
pub struct Katz {
    pub beta: f64,
}

impl Katz {
    pub const DEFAULT_BETA: f64 = 0.1;
    pub const DIVERGENCE_LIMIT: f64 = 1e12;
}

impl Default for Katz {
    fn default() -> Self {
        Katz {
            beta: Self::DEFAULT_BETA,
        }
    }
}

impl Semiring for Katz {
    type Value = f64;

    fn name(&self) -> &'static str {
        "katz"
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    fn combine(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn extend(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn edge_weight(&self, _: &Triple, _: RelationId) -> f64 {
        self.beta
    }
    fn check(&self, v: &f64) -> Result<()> {
        if v.is_finite() && v.abs() <= Self::DIVERGENCE_LIMIT {
            Ok(())
        } else {
            Err(Error::Divergence(format!(
                "katz value {v} exceeds {:e} (beta {} too large for this graph)",
                Self::DIVERGENCE_LIMIT,
                self.beta
            )))
        }
    }
    fn approx_eq(&self, a: &f64, b: &f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }
}

/// Shortest walk length: `(ℕ ∪ {∞}, min, +, w = 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MinDist;

impl Semiring for MinDist {
    type Value = ExtNat;

    fn name(&self) -> &'static str {
        "min-dist"
    }
    fn zero(&self) -> ExtNat {
        ExtNat::Infinite
    }
    fn one(&self) -> ExtNat {
        ExtNat::Finite(0)
    }
    fn combine(&self, a: &ExtNat, b: &ExtNat) -> ExtNat {
        *a.min(b)
    }
    fn extend(&self, a: &ExtNat, b: &ExtNat) -> ExtNat {
        match (a, b) {
            (ExtNat::Finite(x), ExtNat::Finite(y)) => ExtNat::Finite(x + y),
            _ => ExtNat::Infinite,
        }
    }
    fn edge_weight(&self, _: &Triple, _: RelationId) -> ExtNat {
        ExtNat::Finite(1)
    }
}

/// Most reliable walk: `([0, 1], max, ×)` with a per-relation weight in `(0, 1]`.
#[derive(Debug, Clone)]
pub struct WeightedReach {
    weights: Vec<f64>,
    default_weight: f64,
}

impl WeightedReach {
    pub fn new(weights: Vec<f64>, default_weight: f64) -> Result<Self> {
        for &w in weights.iter().chain(std::iter::once(&default_weight)) {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::Config(format!(
                    "relation weight {w} outside (0, 1]"
                )));
            }
        }
        Ok(WeightedReach {
            weights,
            default_weight,
        })
    }

    pub fn weight(&self, r: RelationId) -> f64 {
        self.weights
            .get(r.index())
            .copied()
            .unwrap_or(self.default_weight)
    }
}

impl Semiring for WeightedReach {
    type Value = f64;

    fn name(&self) -> &'static str {
        "weighted-reach"
    }
    fn zero(&self) -> f64 {
        0.0
    }
    fn one(&self) -> f64 {
        1.0
    }
    fn combine(&self, a: &f64, b: &f64) -> f64 {
        a.max(*b)
    }
    fn extend(&self, a: &f64, b: &f64) -> f64 {
        a * b
    }
    fn edge_weight(&self, e: &Triple, _: RelationId) -> f64 {
        self.weight(e.relation)
    }
    fn approx_eq(&self, a: &f64, b: &f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }
}

/// Any semiring with a caller-supplied edge weight function.
pub struct CustomWeight<S, F> {
    pub inner: S,
    pub weight: F,
}

impl<S, F> Semiring for CustomWeight<S, F>
where
    S: Semiring,
    F: Fn(&Triple, RelationId) -> S::Value + Sync,
{
    type Value = S::Value;

    fn name(&self) -> &'static str {
        "custom"
    }
    fn zero(&self) -> S::Value {
        self.inner.zero()
    }
    fn one(&self) -> S::Value {
        self.inner.one()
    }
    fn combine(&self, a: &S::Value, b: &S::Value) -> S::Value {
        self.inner.combine(a, b)
    }
    fn extend(&self, a: &S::Value, b: &S::Value) -> S::Value {
        self.inner.extend(a, b)
    }
    fn edge_weight(&self, e: &Triple, q: RelationId) -> S::Value {
        (self.weight)(e, q)
    }
    fn combine_into(&self, acc: &mut S::Value, x: &S::Value) {
        self.inner.combine_into(acc, x)
    }
    fn is_zero(&self, v: &S::Value) -> bool {
        self.inner.is_zero(v)
    }
    fn check(&self, v: &S::Value) -> Result<()> {
        self.inner.check(v)
    }
    fn approx_eq(&self, a: &S::Value, b: &S::Value, tol: f64) -> bool {
        self.inner.approx_eq(a, b, tol)
    }
}

/// Semiring selection as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "semiring", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SemiringConfig {
    PathCount,
    Katz {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    MinDist,
    WeightedReach {
        #[serde(default)]
        relation_weights: Vec<f64>,
        #[serde(default = "default_weight")]
        default_weight: f64,
    },
}

fn default_beta() -> f64 {
    Katz::DEFAULT_BETA
}

fn default_weight() -> f64 {
    1.0
}

impl SemiringConfig {
    pub const NAMES: [&'static str; 4] = ["path-count", "katz", "min-dist", "weighted-reach"];

    /// Default parameters for a semiring name.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "path-count" => SemiringConfig::PathCount,
            "katz" => SemiringConfig::Katz {
                beta: default_beta(),
            },
            "min-dist" => SemiringConfig::MinDist,
            "weighted-reach" => SemiringConfig::WeightedReach {
                relation_weights: Vec::new(),
                default_weight: default_weight(),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown semiring `{other}` (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SemiringConfig::PathCount => "path-count",
            SemiringConfig::Katz { .. } => "katz",
            SemiringConfig::MinDist => "min-dist",
            SemiringConfig::WeightedReach { .. } => "weighted-reach",
        }
    }
}
