//! Browser bindings for three small operations: fusing two pasted score
//! lists through the cascade, showing the k-means pool, and mining rules
//! from a pasted graph. Every export returns a JSON string, either
//! `{"ok": ...}` or `{"error": {"code", "message"}}`.

use std::collections::BTreeMap;

use rerank_kg::fuzzy::answer_cut;
use rerank_kg::kg::build_graph;
use rerank_kg::rerank::{kmeans_1d, rerank_scored, select_pool, verify_rerank_bounds, BoundReport, KMEANS_MAX_ITER};
use rerank_kg::rules::{mine_rules, score_candidates};
use rerank_kg::{
    CombineStrategy, CutoffStrategy, EntityId, Error, FuzzyScoreSet, MiningConfig, Query, RelationId, Result,
    TripleFile,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn respond<T: Serialize>(result: Result<T>) -> String {
    let value = match result {
        Ok(v) => serde_json::json!({ "ok": v }),
        Err(e) => serde_json::json!({ "error": { "code": e.code(), "message": e.to_string() } }),
    };
    value.to_string()
}

/// Entity names interned in order of first appearance.
#[derive(Default)]
struct Names(Vec<String>);

impl Names {
    fn id(&mut self, name: &str) -> EntityId {
        let i = self.0.iter().position(|n| n == name).unwrap_or_else(|| {
            self.0.push(name.to_owned());
            self.0.len() - 1
        });
        EntityId(i as u32)
    }

    fn get(&self, name: &str) -> Option<EntityId> {
        self.0.iter().position(|n| n == name).map(|i| EntityId(i as u32))
    }

    fn name(&self, id: EntityId) -> &str {
        &self.0[id.0 as usize]
    }
}

/// Parses `entity score` lines; blank lines and `#` comments are skipped.
fn parse_scores(text: &str, source: &str, names: &mut Names) -> Result<BTreeMap<EntityId, f64>> {
    let mut scores = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = || Error::MalformedRecord {
            source_name: source.to_owned(),
            line: i + 1,
        };
        let mut fields = line.split_whitespace();
        let (Some(entity), Some(score), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(malformed());
        };
        let score: f64 = score.parse().map_err(|_| malformed())?;
        scores.insert(names.id(entity), score);
    }
    Ok(scores)
}

fn query() -> Query {
    Query::new(EntityId(u32::MAX), RelationId::forward(0))
}

#[derive(Debug, Serialize)]
struct FusedRow {
    entity: String,
    rank: usize,
    tier: u8,
    score: f64,
    retriever: f64,
    reranker: f64,
}

#[derive(Debug, Serialize)]
struct AnswerRanks {
    retriever: usize,
    reranker: usize,
    cascade: usize,
    bounds: BoundReport,
}

#[derive(Debug, Serialize)]
struct Fusion {
    pool: Vec<String>,
    rows: Vec<FusedRow>,
    answer: Option<AnswerRanks>,
}

fn fuse_inner(
    retriever: &str,
    reranker: &str,
    answer: &str,
    cutoff: CutoffStrategy,
    combine: CombineStrategy,
) -> Result<Fusion> {
    let mut names = Names::default();
    let first = parse_scores(retriever, "retriever", &mut names)?;
    let second = parse_scores(reranker, "reranker", &mut names)?;
    // Every entity named in either list is a candidate; missing scores are 0.
    let all = |scores: &BTreeMap<EntityId, f64>| {
        let n = names.0.len() as u32;
        FuzzyScoreSet::new(
            query(),
            (0..n).map(|i| (EntityId(i), scores.get(&EntityId(i)).copied().unwrap_or(0.0))),
        )
    };
    let retrieved = all(&first)?;
    let rescored = all(&second)?;
    let answer = match answer.trim() {
        "" => None,
        a => Some(
            names
                .get(a)
                .ok_or_else(|| Error::InvalidParameter(format!("answer `{a}` has no score")))?,
        ),
    };
    let outcome = rerank_scored(retrieved.clone(), cutoff, combine, answer, |members| {
        Ok(rescored
            .restrict(&members.iter().copied().collect())
            .expect("non-empty pool"))
    })?;
    let rows = outcome
        .ranking
        .entries()
        .iter()
        .enumerate()
        .map(|(i, e)| FusedRow {
            entity: names.name(e.entity).to_owned(),
            rank: i + 1,
            tier: e.tier,
            score: e.score,
            retriever: retrieved.membership(e.entity),
            reranker: rescored.membership(e.entity),
        })
        .collect();
    let answer = match answer {
        Some(a) => Some(AnswerRanks {
            retriever: answer_cut(&retrieved, a)?.len(),
            reranker: answer_cut(&rescored, a)?.len(),
            cascade: outcome.ranking.rank_of(a)?,
            bounds: verify_rerank_bounds(&retrieved, &rescored, a)?,
        }),
        None => None,
    };
    Ok(Fusion {
        pool: outcome.pool.iter().map(|e| names.name(e).to_owned()).collect(),
        rows,
        answer,
    })
}

/// Runs the cascade over two pasted `entity score` lists. `cutoff` is JSON
/// such as `{"kind":"top_k","k":3}`; `combine` is replace, min, max or mean.
#[wasm_bindgen]
pub fn fuse(retriever: &str, reranker: &str, answer: &str, cutoff: &str, combine: &str, weight: f64) -> String {
    respond((|| {
        let cutoff: CutoffStrategy =
            serde_json::from_str(cutoff).map_err(|e| Error::InvalidParameter(format!("cutoff: {e}")))?;
        let combine = match combine.parse()? {
            CombineStrategy::Mean { .. } => CombineStrategy::Mean { weight },
            other => other,
        };
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParameter(format!("weight {weight} outside [0, 1]")));
        }
        fuse_inner(retriever, reranker, answer, cutoff, combine)
    })())
}

#[derive(Debug, Serialize)]
struct ClusterView {
    centroid: f64,
    members: Vec<String>,
    kept: bool,
}

#[derive(Debug, Serialize)]
struct KMeansView {
    iterations: usize,
    clusters: Vec<ClusterView>,
    pool: Vec<String>,
}

fn kmeans_inner(scores: &str, k: usize, m: usize) -> Result<KMeansView> {
    let mut names = Names::default();
    let parsed = parse_scores(scores, "scores", &mut names)?;
    let set = FuzzyScoreSet::new(query(), parsed)?;
    let pool = select_pool(&set, &CutoffStrategy::KMeans { k, m }, None)?;
    let entries: Vec<(EntityId, f64)> = set.iter().collect();
    let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
    let clustering = kmeans_1d(&values, k, KMEANS_MAX_ITER);
    let mut clusters: Vec<ClusterView> = clustering
        .centroids
        .iter()
        .enumerate()
        .map(|(c, &centroid)| {
            let members: Vec<EntityId> = entries
                .iter()
                .zip(&clustering.assignments)
                .filter(|(_, &a)| a == c)
                .map(|((e, _), _)| *e)
                .collect();
            ClusterView {
                centroid,
                kept: members.first().is_some_and(|e| pool.contains(*e)),
                members: members.iter().map(|&e| names.name(e).to_owned()).collect(),
            }
        })
        .collect();
    clusters.sort_by(|a, b| b.centroid.total_cmp(&a.centroid));
    Ok(KMeansView {
        iterations: clustering.iterations,
        clusters,
        pool: pool.iter().map(|e| names.name(e).to_owned()).collect(),
    })
}

/// Clusters pasted scores into `k` groups and keeps the `m` highest.
#[wasm_bindgen]
pub fn kmeans_pool(scores: &str, k: usize, m: usize) -> String {
    respond(kmeans_inner(scores, k, m))
}

#[derive(Debug, Serialize)]
struct RuleView {
    body: Vec<String>,
    confidence: f64,
    support: usize,
}

#[derive(Debug, Serialize)]
struct Mined {
    rules: Vec<RuleView>,
    candidates: Vec<(String, f64)>,
}

fn mine_inner(triples: &str, head: &str, relation: &str, hops: usize, min_support: usize) -> Result<Mined> {
    // Pasted text often has spaces where the file format wants tabs.
    let tabbed: String = triples
        .lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join("\t") + "\n")
        .collect();
    let graph = build_graph(TripleFile::from_str_triples(&tabbed)?);
    let h = graph
        .entity(head)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown entity `{head}`")))?;
    let r = graph
        .relation(relation)
        .ok_or_else(|| Error::UnknownRelation(relation.to_owned()))?;
    let config = MiningConfig {
        min_support,
        ..MiningConfig::with_hops(hops)
    };
    let rules = mine_rules(&graph, &config)?;
    let candidates: Vec<EntityId> = graph.entity_ids().filter(|&e| e != h).collect();
    let scored = score_candidates(&rules, &graph, Query::new(h, r), &candidates)?;
    Ok(Mined {
        rules: rules
            .iter()
            .filter(|rule| rule.head == r)
            .map(|rule| RuleView {
                body: rule
                    .body
                    .0
                    .iter()
                    .map(|&b| graph.relation_name(b).into_owned())
                    .collect(),
                confidence: rule.confidence,
                support: rule.support,
            })
            .collect(),
        candidates: scored
            .ranked()
            .into_iter()
            .map(|(e, s)| (graph.entity_name(e).to_owned(), s))
            .collect(),
    })
}

/// Mines path rules from pasted `head relation tail` lines and ranks every
/// entity as a tail for `(head, relation, ?)`.
#[wasm_bindgen]
pub fn mine_and_score(triples: &str, head: &str, relation: &str, hops: usize, min_support: usize) -> String {
    respond(mine_inner(triples, head, relation, hops, min_support))
}
