use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kg::{KnowledgeGraph, SplitDataset, Triple, Vocabs};

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub entities: usize,
    /// Share of `r3` facts held out for testing.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            entities: 50,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

pub const R1: u32 = 0;
pub const R2: u32 = 1;
pub const R3: u32 = 2;

/// Random functional relations `r1`, `r2` and their composition
/// `r3 = r1 ∘ r2`. All `r1`/`r2` facts and the training share of `r3` form
/// the graph; the remaining `r3` facts are the test split.
pub fn compositional_dataset(cfg: &SyntheticConfig) -> Result<SplitDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.entities as u32;
    let r1: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let r2: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut composed: Vec<Triple> = (0..n).map(|x| Triple::new(x, R3, r2[r1[x as usize] as usize])).collect();
    composed.sort();
    composed.dedup();
    composed.shuffle(&mut rng);
    let n_test = ((composed.len() as f64) * cfg.test_fraction).round() as usize;
    let test = composed.split_off(composed.len() - n_test);

    let mut train: Vec<Triple> = (0..n)
        .flat_map(|x| [Triple::new(x, R1, r1[x as usize]), Triple::new(x, R2, r2[x as usize])])
        .collect();
    train.extend(composed);

    let mut vocabs = Vocabs::default();
    for e in 0..n {
        vocabs.entities.get_or_insert(&format!("e{e}"));
    }
    for r in ["r1", "r2", "r3"] {
        vocabs.relations.get_or_insert(r);
    }
    Ok(SplitDataset {
        name: "synthetic-compositional".into(),
        graph: KnowledgeGraph::new(cfg.entities, 3, train.clone())?,
        train,
        valid: Vec::new(),
        test,
        vocabs,
    })
}
