use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kg::EntityId;

/// Edges an external pruning method admits for `(s, o, t)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Admitted {
    All,
    /// Sorted edge indices, all in `E(o)`.
    Only(Vec<usize>),
}

impl Admitted {
    #[inline]
    pub fn contains(&self, edge: usize) -> bool {
        match self {
            Admitted::All => true,
            Admitted::Only(v) => v.binary_search(&edge).is_ok(),
        }
    }
}

/// Edge-set provider whose output is intersected with the window constraint.
pub trait EdgeMask: Sync {
    fn admitted(&self, source: EntityId, target: EntityId, layer: usize) -> Admitted;
}

/// Closure-backed mask.
pub struct FnMask<F>(pub F);

impl<F> EdgeMask for FnMask<F>
where
    F: Fn(EntityId, EntityId, usize) -> Admitted + Sync,
{
    fn admitted(&self, source: EntityId, target: EntityId, layer: usize) -> Admitted {
        (self.0)(source, target, layer)
    }
}

/// Mask read from a TSV of `source<TAB>target<TAB>layer<TAB>edge_index`
/// rows. Each row admits one edge; `(s, o, t)` keys without rows admit all.
#[derive(Debug, Clone, Default)]
pub struct MaskTable {
    sets: HashMap<(u32, u32, usize), Vec<usize>>,
}

impl MaskTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sets: HashMap<(u32, u32, usize), Vec<usize>> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = || Error::Parse {
                line: n + 1,
                message: "expected `source<TAB>target<TAB>layer<TAB>edge_index`".into(),
            };
            if fields.len() != 4 {
                return Err(bad());
            }
            let s: u32 = fields[0].parse().map_err(|_| bad())?;
            let o: u32 = fields[1].parse().map_err(|_| bad())?;
            let t: usize = fields[2].parse().map_err(|_| bad())?;
            let e: usize = fields[3].parse().map_err(|_| bad())?;
            sets.entry((s, o, t)).or_default().push(e);
        }
        for v in sets.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Ok(MaskTable { sets })
    }

    pub fn insert(&mut self, source: EntityId, target: EntityId, layer: usize, edges: Vec<usize>) {
        let mut edges = edges;
        edges.sort_unstable();
        edges.dedup();
        self.sets.insert((source.0, target.0, layer), edges);
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

impl EdgeMask for MaskTable {
    fn admitted(&self, source: EntityId, target: EntityId, layer: usize) -> Admitted {
        match self.sets.get(&(source.0, target.0, layer)) {
            Some(v) => Admitted::Only(v.clone()),
            None => Admitted::All,
        }
    }
}
