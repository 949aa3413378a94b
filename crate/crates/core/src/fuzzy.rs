//! Fuzzy prediction sets over candidate tails.
//!
//! A scorer's output for one query `(h, r, ?)` is a fuzzy set whose
//! membership function is the score. The alpha-cut at the answer's own
//! membership has exactly as many elements as the answer's pessimistic rank.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Query {
    pub head: EntityId,
    pub relation: RelationId,
}

impl Query {
    pub fn new(head: EntityId, relation: RelationId) -> Self {
        Query { head, relation }
    }
}

/// Non-empty map from entity to membership degree in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FuzzyScoreSet {
    query: Query,
    memberships: BTreeMap<EntityId, f64>,
}

impl FuzzyScoreSet {
    /// Builds a set; a repeated entity keeps its last membership.
    pub fn new(query: Query, memberships: impl IntoIterator<Item = (EntityId, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (entity, value) in memberships {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::MembershipOutOfRange {
                    entity: entity.0,
                    value,
                });
            }
            map.insert(entity, value);
        }
        if map.is_empty() {
            return Err(Error::EmptyScoreSet);
        }
        Ok(FuzzyScoreSet {
            query,
            memberships: map,
        })
    }

    pub fn query(&self) -> Query {
        self.query
    }

    pub fn len(&self) -> usize {
        self.memberships.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memberships.is_empty()
    }

    pub fn get(&self, entity: EntityId) -> Option<f64> {
        self.memberships.get(&entity).copied()
    }

    /// Membership with absent entities read as 0.
    pub fn membership(&self, entity: EntityId) -> f64 {
        self.get(entity).unwrap_or(0.0)
    }

    pub fn contains(&self, entity: EntityId) -> bool {
        self.memberships.contains_key(&entity)
    }

    /// Entries in ascending entity order.
    pub fn iter(&self) -> impl Iterator<Item = (EntityId, f64)> + '_ {
        self.memberships.iter().map(|(&e, &m)| (e, m))
    }

    pub fn support(&self) -> CrispEntitySet {
        CrispEntitySet(self.memberships.keys().copied().collect())
    }

    /// Entries by descending membership, ties by ascending entity id.
    pub fn ranked(&self) -> Vec<(EntityId, f64)> {
        let mut entries: Vec<_> = self.iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        entries
    }

    /// The `n` best entities (the whole support when `n` exceeds it).
    pub fn top_n(&self, n: usize) -> CrispEntitySet {
        CrispEntitySet(self.ranked().into_iter().take(n).map(|(e, _)| e).collect())
    }

    /// Restriction to the given entities; `None` when nothing remains.
    pub fn restrict(&self, keep: &CrispEntitySet) -> Option<Self> {
        let memberships: BTreeMap<_, _> = self.iter().filter(|(e, _)| keep.contains(*e)).collect();
        (!memberships.is_empty()).then_some(FuzzyScoreSet {
            query: self.query,
            memberships,
        })
    }

    /// Writes `head<TAB>relation<TAB>entity<TAB>membership` lines with six
    /// decimal digits.
    pub fn write_records(&self, graph: &KnowledgeGraph, mut out: impl Write) -> std::io::Result<()> {
        let head = graph.entity_name(self.query.head);
        let relation = graph.relation_name(self.query.relation);
        for (entity, m) in self.iter() {
            writeln!(out, "{head}\t{relation}\t{}\t{m:.6}", graph.entity_name(entity))?;
        }
        Ok(())
    }
}

/// Ordinary (crisp) set of entities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CrispEntitySet(pub BTreeSet<EntityId>);

impl CrispEntitySet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, entity: EntityId) -> bool {
        self.0.contains(&entity)
    }

    pub fn iter(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &CrispEntitySet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn intersection_len(&self, other: &CrispEntitySet) -> usize {
        self.0.intersection(&other.0).count()
    }

    pub fn difference_len(&self, other: &CrispEntitySet) -> usize {
        self.0.difference(&other.0).count()
    }
}

impl FromIterator<EntityId> for CrispEntitySet {
    fn from_iter<I: IntoIterator<Item = EntityId>>(iter: I) -> Self {
        CrispEntitySet(iter.into_iter().collect())
    }
}

/// `{ t | mu(t) >= alpha }`.
pub fn alpha_cut(set: &FuzzyScoreSet, alpha: f64) -> CrispEntitySet {
    set.iter().filter(|&(_, m)| m >= alpha).map(|(e, _)| e).collect()
}

/// Alpha-cut at the answer's own membership. Its size is the answer's rank
/// with ties counted against it.
pub fn answer_cut(set: &FuzzyScoreSet, answer: EntityId) -> Result<CrispEntitySet> {
    let alpha = set.get(answer).ok_or(Error::AnswerNotInSet(answer.0))?;
    Ok(alpha_cut(set, alpha))
}

/// Weight set of a convex combination.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Constant(f64),
    /// Per-entity weights; entities missing from the set use 0.5.
    PerEntity(FuzzyScoreSet),
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Constant(0.5)
    }
}

impl Weight {
    pub fn at(&self, entity: EntityId) -> f64 {
        match self {
            Weight::Constant(w) => *w,
            Weight::PerEntity(set) => set.get(entity).unwrap_or(0.5),
        }
    }
}

fn zip_with(a: &FuzzyScoreSet, b: &FuzzyScoreSet, f: impl Fn(EntityId, f64, f64) -> f64) -> Result<FuzzyScoreSet> {
    if a.query != b.query {
        return Err(Error::QueryMismatch);
    }
    let keys: BTreeSet<EntityId> = a.memberships.keys().chain(b.memberships.keys()).copied().collect();
    let memberships = keys
        .into_iter()
        .map(|e| (e, f(e, a.membership(e), b.membership(e))))
        .collect();
    Ok(FuzzyScoreSet {
        query: a.query,
        memberships,
    })
}

/// Pointwise minimum over the union of supports.
pub fn combine_min(a: &FuzzyScoreSet, b: &FuzzyScoreSet) -> Result<FuzzyScoreSet> {
    zip_with(a, b, |_, x, y| x.min(y))
}

/// Pointwise maximum over the union of supports.
pub fn combine_max(a: &FuzzyScoreSet, b: &FuzzyScoreSet) -> Result<FuzzyScoreSet> {
    zip_with(a, b, |_, x, y| x.max(y))
}

/// `w(t) * a(t) + (1 - w(t)) * b(t)`.
pub fn combine_convex(a: &FuzzyScoreSet, b: &FuzzyScoreSet, weight: &Weight) -> Result<FuzzyScoreSet> {
    if let Weight::Constant(w) = weight {
        if !(0.0..=1.0).contains(w) {
            return Err(Error::InvalidParameter(format!("weight {w} outside [0, 1]")));
        }
    }
    zip_with(a, b, |e, x, y| {
        let w = weight.at(e);
        // exact at the endpoints so that w = 1 / w = 0 reproduce a / b
        if w == 1.0 {
            x
        } else if w == 0.0 {
            y
        } else {
            (w * x + (1.0 - w) * y).clamp(x.min(y), x.max(y))
        }
    })
}
