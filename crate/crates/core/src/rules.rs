//! Relation-path rule mining and rule-based triple scoring.
//!
//! A rule `body -> head` says that when a relation path `body` joins `x` to
//! `y`, the fact `(x, head, y)` tends to hold. Confidence is the standard
//! one: pairs where body and head co-occur over pairs joined by the body.
//! A triple is scored by its best rule over all connecting paths.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path as FsPath;

use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyScoreSet, Query};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::par;
use crate::paths::{enumerate_paths, PathLimits, RelationPath};

/// Scores a candidate triple with a membership degree in `[0, 1]`.
///
/// Implementations must be deterministic and total: a candidate with no
/// supporting evidence still gets a score.
pub trait Scorer: Send + Sync {
    fn score(&self, graph: &KnowledgeGraph, head: EntityId, relation: RelationId, tail: EntityId) -> Result<f64>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub body: RelationPath,
    pub head: RelationId,
    pub confidence: f64,
    pub support: usize,
    pub body_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiningConfig {
    pub max_hops: usize,
    pub min_support: usize,
    /// Path cap used when the mined rules score triples.
    pub max_paths: usize,
    /// Score of a triple no rule fires on.
    pub default_score: f64,
    pub workers: usize,
}

impl MiningConfig {
    pub fn with_hops(max_hops: usize) -> Self {
        MiningConfig {
            max_hops,
            ..Self::default()
        }
    }
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            max_hops: 3,
            min_support: 2,
            max_paths: 100,
            default_score: 0.0,
            workers: 1,
        }
    }
}

/// Mined rules grouped by head relation, each group sorted by descending
/// confidence.
#[derive(Clone, Debug)]
pub struct RuleBase {
    by_head: BTreeMap<RelationId, Vec<Rule>>,
    lookup: HashMap<RelationId, HashMap<RelationPath, f64>>,
    max_hops: usize,
    max_paths: usize,
    default_score: f64,
}

/// Mines rules from every training fact `(h, r, t)`: each simple path from
/// `h` to `t` of at most `max_hops` steps, other than the fact's own edge,
/// proposes its relation sequence as a body for `r`.
pub fn mine_rules(train: &KnowledgeGraph, config: &MiningConfig) -> Result<RuleBase> {
    if !(1..=3).contains(&config.max_hops) {
        return Err(Error::InvalidParameter(format!(
            "max_hops must be 1, 2 or 3, got {}",
            config.max_hops
        )));
    }
    if config.min_support == 0 {
        return Err(Error::InvalidParameter("min_support must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&config.default_score) {
        return Err(Error::InvalidParameter("default_score outside [0, 1]".into()));
    }
    let limits = PathLimits {
        max_hops: config.max_hops,
        max_paths: usize::MAX,
    };
    let triples = train.triples();
    let bodies_per_triple = par::map_indexed(config.workers, triples.len(), |i| {
        let t = triples[i];
        let paths = enumerate_paths(train, t.head, t.tail, limits, Some(t.relation))?;
        let bodies: BTreeSet<RelationPath> = paths.iter().map(|p| p.relations()).collect();
        Ok(bodies)
    })?;

    let mut support: BTreeMap<(RelationId, RelationPath), usize> = BTreeMap::new();
    for (t, bodies) in triples.iter().zip(bodies_per_triple) {
        for body in bodies {
            *support.entry((t.relation, body)).or_default() += 1;
        }
    }
    let bodies: Vec<RelationPath> = support
        .keys()
        .map(|(_, b)| b.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let counts = par::map_indexed(config.workers, bodies.len(), |i| Ok(body_count(train, &bodies[i])))?;
    let body_counts: HashMap<&RelationPath, usize> = bodies.iter().zip(counts).collect();

    let rules = support
        .into_iter()
        .filter(|(_, s)| *s >= config.min_support)
        .map(|((head, body), support)| {
            let body_count = body_counts[&body];
            Rule {
                confidence: support as f64 / body_count as f64,
                body,
                head,
                support,
                body_count,
            }
        });
    Ok(RuleBase::from_rules(
        rules,
        config.max_hops,
        config.max_paths,
        config.default_score,
    ))
}

/// Number of distinct `(x, y)` pairs joined by a simple path following
/// `body`.
pub fn body_count(graph: &KnowledgeGraph, body: &RelationPath) -> usize {
    let Some(&first) = body.0.first() else {
        return 0;
    };
    let mut pairs = 0;
    let mut ends = HashSet::new();
    let mut trail = Vec::with_capacity(body.len() + 1);
    for x in graph.entity_ids() {
        if graph.neighbors(x, first).is_empty() {
            continue;
        }
        ends.clear();
        trail.clear();
        trail.push(x);
        follow(graph, &body.0, &mut trail, &mut ends);
        pairs += ends.len();
    }
    pairs
}

fn follow(graph: &KnowledgeGraph, rest: &[RelationId], trail: &mut Vec<EntityId>, ends: &mut HashSet<EntityId>) {
    let Some((&r, tail)) = rest.split_first() else {
        ends.insert(*trail.last().expect("trail starts non-empty"));
        return;
    };
    let at = *trail.last().expect("trail starts non-empty");
    for &next in graph.neighbors(at, r) {
        if trail.contains(&next) {
            continue;
        }
        trail.push(next);
        follow(graph, tail, trail, ends);
        trail.pop();
    }
}

impl RuleBase {
    pub fn from_rules(
        rules: impl IntoIterator<Item = Rule>,
        max_hops: usize,
        max_paths: usize,
        default_score: f64,
    ) -> Self {
        let mut by_head: BTreeMap<RelationId, Vec<Rule>> = BTreeMap::new();
        for rule in rules {
            by_head.entry(rule.head).or_default().push(rule);
        }
        let mut lookup: HashMap<RelationId, HashMap<RelationPath, f64>> = HashMap::new();
        for (head, group) in &mut by_head {
            group.sort_by(|a, b| {
                b.confidence
                    .total_cmp(&a.confidence)
                    .then(b.support.cmp(&a.support))
                    .then(a.body.cmp(&b.body))
            });
            let table = lookup.entry(*head).or_default();
            for rule in group.iter() {
                let slot = table.entry(rule.body.clone()).or_insert(rule.confidence);
                *slot = slot.max(rule.confidence);
            }
        }
        RuleBase {
            by_head,
            lookup,
            max_hops,
            max_paths,
            default_score,
        }
    }

    pub fn max_hops(&self) -> usize {
        self.max_hops
    }

    pub fn default_score(&self) -> f64 {
        self.default_score
    }

    pub fn len(&self) -> usize {
        self.by_head.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rules_for(&self, head: RelationId) -> &[Rule] {
        self.by_head.get(&head).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.by_head.values().flatten()
    }

    pub fn confidence(&self, body: &RelationPath, head: RelationId) -> Option<f64> {
        self.lookup.get(&head)?.get(body).copied()
    }

    /// Best confidence over the capped, canonically ordered paths from `h`
    /// to `t`; the edge `(h, r, t)` itself is never evidence.
    pub fn score_triple(&self, graph: &KnowledgeGraph, h: EntityId, r: RelationId, t: EntityId) -> Result<f64> {
        graph.check_entity(h)?;
        graph.check_entity(t)?;
        let Some(table) = self.lookup.get(&r) else {
            return Ok(self.default_score);
        };
        let limits = PathLimits {
            max_hops: self.max_hops,
            max_paths: self.max_paths,
        };
        let best = enumerate_paths(graph, h, t, limits, Some(r))?
            .iter()
            .filter_map(|p| table.get(&p.relations()).copied())
            .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))));
        Ok(best.unwrap_or(self.default_score))
    }

    /// Writes `confidence<TAB>support<TAB>head<TAB>body_1,body_2,...` lines.
    pub fn write(&self, graph: &KnowledgeGraph, mut out: impl Write) -> std::io::Result<()> {
        for rule in self.iter() {
            let body: Vec<_> = rule.body.0.iter().map(|&r| graph.relation_name(r)).collect();
            writeln!(
                out,
                "{:.6}\t{}\t{}\t{}",
                rule.confidence,
                rule.support,
                graph.relation_name(rule.head),
                body.join(",")
            )?;
        }
        Ok(())
    }
}

impl Scorer for RuleBase {
    fn score(&self, graph: &KnowledgeGraph, head: EntityId, relation: RelationId, tail: EntityId) -> Result<f64> {
        self.score_triple(graph, head, relation, tail)
    }
}

/// Scores every distinct candidate for `(h, r, ?)`.
pub fn score_candidates(
    scorer: &dyn Scorer,
    graph: &KnowledgeGraph,
    query: Query,
    candidates: &[EntityId],
) -> Result<FuzzyScoreSet> {
    let distinct: BTreeSet<EntityId> = candidates.iter().copied().collect();
    let scored = distinct
        .into_iter()
        .map(|t| Ok((t, scorer.score(graph, query.head, query.relation, t)?)))
        .collect::<Result<Vec<_>>>()?;
    FuzzyScoreSet::new(query, scored)
}

/// Score table read from a dump of another model's predictions, keyed by
/// surface strings.
#[derive(Clone, Debug, Default)]
pub struct ExternalScores {
    table: HashMap<(String, String, String), f64>,
    default_score: f64,
}

impl ExternalScores {
    pub fn from_reader(reader: impl BufRead, source_name: &str, default_score: f64) -> Result<Self> {
        let mut table = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let malformed = || Error::MalformedRecord {
                source_name: source_name.to_owned(),
                line: i + 1,
            };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if fields.len() != 4 || fields[..3].iter().any(|f| f.is_empty()) {
                return Err(malformed());
            }
            let value: f64 = fields[3].parse().map_err(|_| malformed())?;
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ScoreOutOfRange {
                    source_name: source_name.to_owned(),
                    line: i + 1,
                    value,
                });
            }
            table.insert(
                (fields[0].to_owned(), fields[1].to_owned(), fields[2].to_owned()),
                value,
            );
        }
        Ok(ExternalScores { table, default_score })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn lookup(&self, head: &str, relation: &str, tail: &str) -> Option<f64> {
        // borrowed-key lookup would need a custom key type; dumps are small
        self.table
            .get(&(head.to_owned(), relation.to_owned(), tail.to_owned()))
            .copied()
    }
}

pub fn load_external_scores(path: impl AsRef<FsPath>, default_score: f64) -> Result<ExternalScores> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ExternalScores::from_reader(BufReader::new(file), &path.display().to_string(), default_score)
}

impl Scorer for ExternalScores {
    fn score(&self, graph: &KnowledgeGraph, head: EntityId, relation: RelationId, tail: EntityId) -> Result<f64> {
        graph.check_entity(head)?;
        graph.check_entity(tail)?;
        Ok(self
            .lookup(
                graph.entity_name(head),
                &graph.relation_name(relation),
                graph.entity_name(tail),
            )
            .unwrap_or(self.default_score))
    }
}
