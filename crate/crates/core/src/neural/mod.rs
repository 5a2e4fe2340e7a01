//! Differentiable truncated propagation at toy scale.
//!
//! States start as the query embedding at the source and zero elsewhere.
//! Each scheduled update multiplies sender states by per-layer relation
//! embeddings, optionally appends `ρ_o` copies of a degree embedding, and
//! aggregates with the node's initial state. The final pair representation
//! is the last window state or an attention mix of all window states, and
//! a two-layer MLP on `[x^F, x_q]` gives the logit.

mod gradcheck;
mod model;
mod params;
mod synthetic;
mod tape;
mod train;

pub use gradcheck::{gradient_check, random_instance, GroupError, NORM_FLOOR};
pub use model::{
    aggregate, attention_final, forward, indicator_init, loss_and_grad, message, score, score_all, score_logit,
    ForwardPass, TrainingExample,
};
pub use params::{Aggregation, AttentionMode, ModelConfig, ModelParams, ParamGroup, CHECKPOINT_FORMAT};
pub use synthetic::{compositional_dataset, SyntheticConfig, R1, R2, R3};
pub use tape::{sigmoid, NodeId, Tape, STD_EPS};
pub use train::{
    filtered_rank, rank_filtered, rank_filtered_with, train_toy, training_view, Adam, KnownAnswers, RankingMetrics, TrainConfig,
    TrainOutcome, MAX_TRAIN_EDGES,
};
