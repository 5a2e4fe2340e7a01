use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    Sum,
    Max,
    Min,
    Pna,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionMode {
    /// `x^F` is the state at `min(d + δ, T)`.
    Fixed,
    /// `x^F` is a softmax-weighted mix of the window states.
    Specific,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dim: usize,
    pub layers: usize,
    pub delta: u32,
    pub aggregation: Aggregation,
    pub attention: AttentionMode,
    /// Attention scores reuse the score MLP.
    pub share_attention: bool,
    pub temperature: f64,
    pub degree_messages: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 16,
            layers: 4,
            delta: 2,
            aggregation: Aggregation::Sum,
            attention: AttentionMode::Fixed,
            share_attention: false,
            temperature: 1.0,
            degree_messages: true,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be positive".into()));
        }
        if self.layers == 0 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.temperature)));
        }
        Ok(())
    }

    fn uses_attention_mlp(&self) -> bool {
        self.attention == AttentionMode::Specific && !self.share_attention
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGroup {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl ParamGroup {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Offsets of a two-layer MLP `w2 · relu(W1 x + b1) + b2` inside the buffer.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MlpLayout {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub hidden: usize,
}

/// All trainable tensors in one flat buffer, addressed by named groups.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    /// Relations of the propagation graph, reciprocals included.
    pub relations: usize,
    pub groups: Vec<ParamGroup>,
    pub data: Vec<f64>,
}

impl ModelParams {
    fn layout(config: &ModelConfig, relations: usize) -> Vec<ParamGroup> {
        let (d, t) = (config.dim, config.layers);
        let mut shapes: Vec<(&str, Vec<usize>)> = vec![
            ("query", vec![relations, d]),
            ("relation", vec![t, relations, d]),
            ("degree", vec![t, d]),
        ];
        if config.aggregation == Aggregation::Pna {
            shapes.push(("pna_weight", vec![t, d, 4 * d]));
            shapes.push(("pna_bias", vec![t, d]));
        }
        shapes.extend([
            ("score_w1", vec![d, 2 * d]),
            ("score_b1", vec![d]),
            ("score_w2", vec![1, d]),
            ("score_b2", vec![1]),
        ]);
        if config.uses_attention_mlp() {
            shapes.extend([
                ("attn_w1", vec![d, 2 * d]),
                ("attn_b1", vec![d]),
                ("attn_w2", vec![1, d]),
                ("attn_b2", vec![1]),
            ]);
        }
        let mut offset = 0;
        shapes
            .into_iter()
            .map(|(name, shape)| {
                let g = ParamGroup {
                    name: name.into(),
                    offset,
                    shape,
                };
                offset += g.len();
                g
            })
            .collect()
    }

    pub fn zeros(config: ModelConfig, relations: usize) -> Result<Self> {
        config.validate()?;
        let groups = Self::layout(&config, relations);
        let n = groups.last().map_or(0, |g| g.offset + g.len());
        Ok(ModelParams {
            config,
            relations,
            groups,
            data: vec![0.0; n],
        })
    }

    pub fn init(config: ModelConfig, relations: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut p = Self::zeros(config, relations)?;
        for g in p.groups.clone() {
            let fan_in = *g.shape.last().unwrap_or(&1) as f64;
            for x in &mut p.data[g.range()] {
                *x = match g.name.as_str() {
                    "query" => rng.gen_range(-1.0..1.0),
                    // near-identity DistMult factors keep path products in range
                    "relation" => rng.gen_range(0.5..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                    "degree" => rng.gen_range(-0.1..0.1),
                    n if n.ends_with("bias") || n.ends_with("b1") || n.ends_with("b2") => 0.0,
                    _ => rng.gen_range(-1.0..1.0) * (3.0 / fan_in).sqrt(),
                };
            }
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn group(&self, name: &str) -> Option<&ParamGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    fn offset(&self, name: &str) -> usize {
        self.group(name).map(|g| g.offset).expect("group present in layout")
    }

    pub(crate) fn query_offset(&self, q: usize) -> usize {
        self.offset("query") + q * self.config.dim
    }

    pub(crate) fn relation_offset(&self, layer: usize, r: usize) -> usize {
        self.offset("relation") + ((layer - 1) * self.relations + r) * self.config.dim
    }

    pub(crate) fn degree_offset(&self, layer: usize) -> usize {
        self.offset("degree") + (layer - 1) * self.config.dim
    }

    pub(crate) fn pna_offsets(&self, layer: usize) -> (usize, usize) {
        let d = self.config.dim;
        (
            self.offset("pna_weight") + (layer - 1) * d * 4 * d,
            self.offset("pna_bias") + (layer - 1) * d,
        )
    }

    pub(crate) fn score_mlp(&self) -> MlpLayout {
        self.mlp("score")
    }

    pub(crate) fn attention_mlp(&self) -> MlpLayout {
        if self.config.uses_attention_mlp() {
            self.mlp("attn")
        } else {
            self.mlp("score")
        }
    }

    fn mlp(&self, prefix: &str) -> MlpLayout {
        MlpLayout {
            w1: self.offset(&format!("{prefix}_w1")),
            b1: self.offset(&format!("{prefix}_b1")),
            w2: self.offset(&format!("{prefix}_w2")),
            b2: self.offset(&format!("{prefix}_b2")),
            hidden: self.config.dim,
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        for g in &self.groups {
            if let Some(k) = self.data[g.range()].iter().position(|x| !x.is_finite()) {
                return Err(Error::Divergence(format!("parameter {}[{k}] is not finite", g.name)));
            }
        }
        Ok(())
    }
}

pub const CHECKPOINT_FORMAT: &str = "tagnet-checkpoint/v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    config: ModelConfig,
    relations: usize,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    pub fn to_checkpoint_json(&self) -> Result<String> {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            config: self.config.clone(),
            relations: self.relations,
            tensors: self
                .groups
                .iter()
                .map(|g| Tensor {
                    name: g.name.clone(),
                    shape: g.shape.clone(),
                    data: self.data[g.range()].to_vec(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&ck)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Config(format!(
                "unsupported checkpoint format {:?}, expected {CHECKPOINT_FORMAT:?}",
                ck.format
            )));
        }
        let mut p = Self::zeros(ck.config, ck.relations)?;
        if ck.tensors.len() != p.groups.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} tensors, configuration needs {}",
                ck.tensors.len(),
                p.groups.len()
            )));
        }
        for (g, t) in p.groups.clone().iter().zip(&ck.tensors) {
            if g.name != t.name || g.shape != t.shape || t.data.len() != g.len() {
                return Err(Error::Config(format!(
                    "tensor {} with shape {:?} does not match expected {} {:?}",
                    t.name, t.shape, g.name, g.shape
                )));
            }
            p.data[g.range()].copy_from_slice(&t.data);
        }
        p.check_finite()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_json(&text)
    }
}
