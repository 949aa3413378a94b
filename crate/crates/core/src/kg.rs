//! Triple store: vocabularies, indexed graphs with materialized inverse
//! edges, and inductive split validation.

use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Suffix marking the inverse of a relation in surface strings.
pub const INVERSE_SUFFIX: &str = "^-1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Relation handle. Forward relation `i` is encoded as `2i`, its inverse as
/// `2i + 1`, so every forward relation has exactly one paired inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(u32);

impl RelationId {
    pub fn forward(base: u32) -> Self {
        RelationId(base << 1)
    }

    pub fn from_raw(raw: u32) -> Self {
        RelationId(raw)
    }

    pub fn raw(self) -> u32 {
        self.0
    }

    /// Index of the underlying forward relation in the vocabulary.
    pub fn base(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn inverse(self) -> Self {
        RelationId(self.0 ^ 1)
    }

    /// The forward relation of this id (itself when already forward).
    pub fn to_forward(self) -> Self {
        RelationId(self.0 & !1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple { head, relation, tail }
    }

    /// The same fact expressed with a forward relation.
    pub fn normalized(self) -> Self {
        if self.relation.is_inverse() {
            Triple::new(self.tail, self.relation.inverse(), self.head)
        } else {
            self
        }
    }
}

/// Interned strings with dense ids in first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

fn split_relation(name: &str) -> (&str, bool) {
    match name.strip_suffix(INVERSE_SUFFIX) {
        Some(base) if !base.is_empty() => (base, true),
        _ => (name, false),
    }
}

/// Parsed triple file: triples in file order plus the vocabularies built
/// while reading it.
#[derive(Clone, Debug, Default)]
pub struct TripleFile {
    pub entities: Vocab,
    /// Forward relation names only; inverses are derived.
    pub relations: Vocab,
    pub triples: Vec<Triple>,
}

impl TripleFile {
    pub fn from_reader(reader: impl BufRead, source_name: &str) -> Result<Self> {
        let mut file = TripleFile::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
                return Err(Error::MalformedLine {
                    source_name: source_name.to_owned(),
                    line: i + 1,
                });
            }
            file.push(fields[0], fields[1], fields[2]);
        }
        Ok(file)
    }

    pub fn from_str_triples(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes(), "<memory>")
    }

    /// Appends a triple given by surface strings. A relation carrying the
    /// inverse suffix is interned under its base name.
    pub fn push(&mut self, head: &str, relation: &str, tail: &str) -> Triple {
        let h = EntityId(self.entities.intern(head));
        let (base, inverse) = split_relation(relation);
        let r = RelationId::forward(self.relations.intern(base));
        let t = EntityId(self.entities.intern(tail));
        let triple = Triple::new(h, if inverse { r.inverse() } else { r }, t);
        self.triples.push(triple);
        triple
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        self.entities.name(id.0).unwrap_or("?")
    }

    pub fn relation_name(&self, id: RelationId) -> Cow<'_, str> {
        relation_surface(&self.relations, id)
    }
}

fn relation_surface(vocab: &Vocab, id: RelationId) -> Cow<'_, str> {
    let base = vocab.name(id.base()).unwrap_or("?");
    if id.is_inverse() {
        Cow::Owned(format!("{base}{INVERSE_SUFFIX}"))
    } else {
        Cow::Borrowed(base)
    }
}

/// Reads a UTF-8 file of tab-separated `head relation tail` lines.
pub fn load_triples(path: impl AsRef<Path>) -> Result<TripleFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    TripleFile::from_reader(BufReader::new(file), &path.display().to_string())
}

/// Immutable indexed knowledge graph.
///
/// Every stored fact `(h, r, t)` is indexed twice: as `(h, r) -> t` and as
/// `(t, r^-1) -> h`. `triple_count` counts forward facts only.
#[derive(Clone, Debug)]
pub struct KnowledgeGraph {
    entities: Vocab,
    relations: Vocab,
    triples: Vec<Triple>,
    triple_set: HashSet<Triple>,
    by_entity_relation: HashMap<(EntityId, RelationId), Vec<EntityId>>,
    outgoing: Vec<Vec<(RelationId, EntityId)>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
}

/// Builds the indexed graph. Inverse-relation triples are normalized to the
/// forward direction and duplicates are dropped (first occurrence kept).
pub fn build_graph(file: TripleFile) -> KnowledgeGraph {
    KnowledgeGraph::from_parts(file.entities, file.relations, file.triples)
}

impl KnowledgeGraph {
    pub fn from_parts(entities: Vocab, relations: Vocab, triples: Vec<Triple>) -> Self {
        let mut triple_set = HashSet::with_capacity(triples.len());
        let mut kept = Vec::with_capacity(triples.len());
        for t in triples.into_iter().map(Triple::normalized) {
            if triple_set.insert(t) {
                kept.push(t);
            }
        }
        let mut outgoing: Vec<Vec<(RelationId, EntityId)>> = vec![Vec::new(); entities.len()];
        let mut by_entity_relation: HashMap<(EntityId, RelationId), Vec<EntityId>> = HashMap::new();
        for t in &kept {
            outgoing[t.head.index()].push((t.relation, t.tail));
            outgoing[t.tail.index()].push((t.relation.inverse(), t.head));
            by_entity_relation.entry((t.head, t.relation)).or_default().push(t.tail);
            by_entity_relation
                .entry((t.tail, t.relation.inverse()))
                .or_default()
                .push(t.head);
        }
        for edges in &mut outgoing {
            edges.sort_unstable();
        }
        for targets in by_entity_relation.values_mut() {
            targets.sort_unstable();
        }
        KnowledgeGraph {
            entities,
            relations,
            triples: kept,
            triple_set,
            by_entity_relation,
            outgoing,
        }
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    /// Number of forward relations in the vocabulary.
    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity_vocab(&self) -> &Vocab {
        &self.entities
    }

    pub fn relation_vocab(&self) -> &Vocab {
        &self.relations
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entities.len() as u32).map(EntityId)
    }

    pub fn entity(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId)
    }

    /// Resolves a relation surface string, including the inverse suffix.
    pub fn relation(&self, name: &str) -> Option<RelationId> {
        let (base, inverse) = split_relation(name);
        let r = RelationId::forward(self.relations.get(base)?);
        Some(if inverse { r.inverse() } else { r })
    }

    pub fn entity_name(&self, id: EntityId) -> &str {
        self.entities.name(id.0).unwrap_or("?")
    }

    pub fn relation_name(&self, id: RelationId) -> Cow<'_, str> {
        relation_surface(&self.relations, id)
    }

    pub fn check_entity(&self, id: EntityId) -> Result<()> {
        if id.index() < self.entities.len() {
            Ok(())
        } else {
            Err(Error::UnknownEntity(id.0))
        }
    }

    /// Tails reachable from `entity` over `relation` (forward or inverse).
    pub fn neighbors(&self, entity: EntityId, relation: RelationId) -> &[EntityId] {
        self.by_entity_relation
            .get(&(entity, relation))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// All edges leaving `entity` in both directions, sorted by
    /// (relation, neighbor).
    pub fn outgoing(&self, entity: EntityId) -> &[(RelationId, EntityId)] {
        self.outgoing.get(entity.index()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Edge count touching `entity`, counting both directions.
    pub fn degree(&self, entity: EntityId) -> usize {
        self.outgoing(entity).len()
    }

    pub fn contains(&self, triple: Triple) -> bool {
        self.triple_set.contains(&triple.normalized())
    }

    /// Total adjacency entries: forward plus inverse.
    pub fn index_entry_count(&self) -> usize {
        self.outgoing.iter().map(Vec::len).sum()
    }

    pub fn summary(&self) -> GraphSummary {
        let used: HashSet<u32> = self.triples.iter().map(|t| t.relation.base()).collect();
        GraphSummary {
            entities: self.entities.len(),
            relations: used.len(),
            triples: self.triples.len(),
        }
    }

    /// Writes the deduplicated forward triples in the input file format.
    pub fn write_triples(&self, mut out: impl Write) -> std::io::Result<()> {
        for t in &self.triples {
            writeln!(
                out,
                "{}\t{}\t{}",
                self.entity_name(t.head),
                self.relation_name(t.relation),
                self.entity_name(t.tail)
            )?;
        }
        Ok(())
    }

    /// Maps triples from a separately parsed file into this graph's ids.
    pub fn resolve(&self, file: &TripleFile) -> Result<Vec<Triple>> {
        file.triples
            .iter()
            .map(|t| {
                let lookup = |e: EntityId| {
                    let name = file.entity_name(e);
                    self.entity(name)
                        .ok_or_else(|| Error::DanglingTestEntity(name.to_owned()))
                };
                let name = file.relation_name(t.relation);
                let relation = self
                    .relation(&name)
                    .ok_or_else(|| Error::UnknownRelation(name.to_string()))?;
                Ok(Triple::new(lookup(t.head)?, relation, lookup(t.tail)?))
            })
            .collect()
    }
}

/// A validated inductive split. The inference graph shares the training
/// graph's relation vocabulary, so rules mined on one apply to the other.
#[derive(Clone, Debug)]
pub struct InductiveSplit {
    pub train_graph: KnowledgeGraph,
    pub inference_graph: KnowledgeGraph,
    pub test_triples: Vec<Triple>,
}

pub fn validate_split(train: &KnowledgeGraph, inference: &KnowledgeGraph, test: &TripleFile) -> Result<InductiveSplit> {
    let shared: Vec<String> = inference
        .entities
        .names()
        .filter(|name| train.entities.get(name).is_some())
        .map(str::to_owned)
        .collect();
    if !shared.is_empty() {
        return Err(Error::EntityOverlap(shared));
    }
    if let Some(name) = inference
        .relations
        .names()
        .find(|name| train.relations.get(name).is_none())
    {
        return Err(Error::UnknownRelation(name.to_owned()));
    }

    let remapped: Vec<Triple> = inference
        .triples
        .iter()
        .map(|t| {
            let name = inference.relations.name(t.relation.base()).unwrap_or("?");
            let base = train.relations.get(name).expect("checked above");
            Triple::new(t.head, RelationId::forward(base), t.tail)
        })
        .collect();
    let inference_graph = KnowledgeGraph::from_parts(inference.entities.clone(), train.relations.clone(), remapped);
    let test_triples = inference_graph.resolve(test)?;
    Ok(InductiveSplit {
        train_graph: train.clone(),
        inference_graph,
        test_triples,
    })
}
