use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{EntityId, KnowledgeGraph, RelationId, Triple};

/// Bidirectional token ↔ id map with ids assigned by first appearance.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn get_or_insert(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.tokens.len() as u32;
        self.tokens.push(token.to_owned());
        self.ids.insert(token.to_owned(), id);
        id
    }

    /// `token<TAB>id` lines in id order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, t) in self.tokens.iter().enumerate() {
            out.push_str(t);
            out.push('\t');
            out.push_str(&id.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in lines(text) {
            let mut parts = line.split('\t');
            let (Some(token), Some(id), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: n,
                    message: "expected `token<TAB>id`".into(),
                });
            };
            let id: u32 = id.parse().map_err(|_| Error::Parse {
                line: n,
                message: format!("invalid id `{id}`"),
            })?;
            entries.push((id, token.to_owned()));
        }
        entries.sort();
        let mut vocab = Vocab::new();
        for (expect, (id, token)) in entries.into_iter().enumerate() {
            if id as usize != expect || vocab.ids.contains_key(&token) {
                return Err(Error::Parse {
                    line: expect + 1,
                    message: "vocabulary ids must be dense and tokens unique".into(),
                });
            }
            vocab.get_or_insert(&token);
        }
        Ok(vocab)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabs {
    pub entities: Vocab,
    pub relations: Vocab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabPolicy {
    /// Assign fresh ids to unseen tokens.
    Build,
    /// Unseen tokens are an error.
    Reuse,
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
}

/// Parses `head<TAB>relation<TAB>tail` lines into triples, in file order.
pub fn load_triples(text: &str, vocabs: &mut Vocabs, policy: VocabPolicy) -> Result<Vec<Triple>> {
    let mut triples = Vec::new();
    for (n, line) in lines(text) {
        let mut fields = line.split('\t');
        let (Some(h), Some(r), Some(t), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(Error::Parse {
                line: n,
                message: "expected exactly 3 tab-separated fields".into(),
            });
        };
        if h.is_empty() || r.is_empty() || t.is_empty() {
            return Err(Error::Parse {
                line: n,
                message: "empty field".into(),
            });
        }
        let triple = match policy {
            VocabPolicy::Build => Triple {
                subject: EntityId(vocabs.entities.get_or_insert(h)),
                relation: RelationId(vocabs.relations.get_or_insert(r)),
                object: EntityId(vocabs.entities.get_or_insert(t)),
            },
            VocabPolicy::Reuse => {
                let entity = |tok: &str| {
                    vocabs.entities.get(tok).map(EntityId).ok_or(Error::Vocabulary {
                        kind: "entity",
                        token: tok.to_owned(),
                    })
                };
                Triple {
                    subject: entity(h)?,
                    relation: vocabs.relations.get(r).map(RelationId).ok_or(
                        Error::Vocabulary {
                            kind: "relation",
                            token: r.to_owned(),
                        },
                    )?,
                    object: entity(t)?,
                }
            }
        };
        triples.push(triple);
    }
    Ok(triples)
}

/// Inverse of [`load_triples`] for triples whose ids are all in `vocabs`.
pub fn write_triples(triples: &[Triple], vocabs: &Vocabs) -> Result<String> {
    let mut out = String::new();
    for t in triples {
        let ent = |e: EntityId| {
            vocabs.entities.token(e.0).ok_or(Error::Bounds {
                kind: "entity",
                index: e.index(),
                size: vocabs.entities.len(),
            })
        };
        let rel = vocabs.relations.token(t.relation.0).ok_or(Error::Bounds {
            kind: "relation",
            index: t.relation.index(),
            size: vocabs.relations.len(),
        })?;
        out.push_str(ent(t.subject)?);
        out.push('\t');
        out.push_str(rel);
        out.push('\t');
        out.push_str(ent(t.object)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Valid => "valid.txt",
            Split::Test => "test.txt",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "train" => Some(Split::Train),
            "valid" | "validation" => Some(Split::Valid),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// A transductive train/valid/test split. The graph holds the train triples
/// only, over the full entity vocabulary of all three splits.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub name: String,
    pub graph: KnowledgeGraph,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub vocabs: Vocabs,
}

impl SplitDataset {
    /// Reads `train.txt`, `valid.txt` and `test.txt` from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |split: Split| -> Result<String> {
            let path: PathBuf = dir.join(split.file_name());
            fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let (train, valid, test) = (read(Split::Train)?, read(Split::Valid)?, read(Split::Test)?);
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(name, &train, &valid, &test)
    }

    pub fn parse(name: impl Into<String>, train: &str, valid: &str, test: &str) -> Result<Self> {
        let mut vocabs = Vocabs::default();
        let train = load_triples(train, &mut vocabs, VocabPolicy::Build)?;
        let valid = load_triples(valid, &mut vocabs, VocabPolicy::Build)?;
        let test = load_triples(test, &mut vocabs, VocabPolicy::Build)?;
        let graph = KnowledgeGraph::new(
            vocabs.entities.len(),
            vocabs.relations.len(),
            train.clone(),
        )?;
        Ok(SplitDataset {
            name: name.into(),
            graph,
            train,
            valid,
            test,
            vocabs,
        })
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Loads an extra triple file against this dataset's vocabularies;
    /// triples mentioning unseen entities or relations are rejected.
    pub fn load_extra(&self, text: &str) -> Result<Vec<Triple>> {
        let mut vocabs = self.vocabs.clone();
        load_triples(text, &mut vocabs, VocabPolicy::Reuse)
    }
}
