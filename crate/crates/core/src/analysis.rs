//! Diagnostics comparing scorers: overlap of top-n predictions, k-hop
//! reachability among each scorer's top predictions, the set-difference
//! ratio between a retriever and a re-ranker, and a DOT export of the
//! subgraph around one query's predictions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyScoreSet, Query};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::par;
use crate::paths::{enumerate_paths, pairwise_reachability_fraction, PathLimits};
use crate::rerank::{set_difference_ratio, top_n_intersection_ratio};
use crate::rules::{score_candidates, Scorer};

/// Every entity except the query head: the candidate list used when ranking
/// against the whole graph.
pub fn all_entity_candidates(graph: &KnowledgeGraph, head: EntityId) -> Vec<EntityId> {
    graph.entity_ids().filter(|&e| e != head).collect()
}

/// `count` distinct indices below `total` (all of them if fewer), drawn with
/// ChaCha8 from `seed` and returned in ascending order.
pub fn sample_indices(total: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, total, count.min(total)).into_vec();
    picked.sort_unstable();
    picked
}

/// One scorer's score sets, one per analysed query, in query order.
#[derive(Clone, Debug)]
pub struct ScoredRun {
    pub name: String,
    pub sets: Vec<FuzzyScoreSet>,
}

pub fn score_run(
    name: &str,
    scorer: &Arc<dyn Scorer>,
    graph: &KnowledgeGraph,
    queries: &[(Query, Vec<EntityId>)],
    workers: usize,
) -> Result<ScoredRun> {
    let sets = par::map_indexed(workers, queries.len(), |i| {
        let (query, candidates) = &queries[i];
        score_candidates(scorer.as_ref(), graph, *query, candidates)
    })?;
    Ok(ScoredRun {
        name: name.to_owned(),
        sets,
    })
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntersectionRow {
    pub n: usize,
    pub left: String,
    pub right: String,
    pub mean: f64,
}

/// Mean top-n intersection ratio for every pair of runs (in input order)
/// and every `n`.
pub fn intersection_table(runs: &[ScoredRun], ns: &[usize]) -> Result<Vec<IntersectionRow>> {
    if runs.len() < 2 {
        return Err(Error::InvalidParameter("need at least two scorers".into()));
    }
    let mut rows = Vec::new();
    for &n in ns {
        for (i, left) in runs.iter().enumerate() {
            for right in &runs[i + 1..] {
                let ratios = left
                    .sets
                    .iter()
                    .zip(&right.sets)
                    .map(|(a, b)| top_n_intersection_ratio(a, b, n))
                    .collect::<Result<Vec<_>>>()?;
                rows.push(IntersectionRow {
                    n,
                    left: left.name.clone(),
                    right: right.name.clone(),
                    mean: mean(ratios),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReachabilityRow {
    pub k: usize,
    pub scorer: String,
    pub mean: f64,
}

/// Mean pairwise k-hop reachability among each run's top-n predictions.
pub fn reachability_table(
    graph: &KnowledgeGraph,
    runs: &[ScoredRun],
    top_n: usize,
    ks: &[usize],
) -> Result<Vec<ReachabilityRow>> {
    if top_n < 2 {
        return Err(Error::TooFewEntities(top_n));
    }
    let mut rows = Vec::new();
    for &k in ks {
        for run in runs {
            let fractions = run
                .sets
                .iter()
                .map(|s| {
                    let top: Vec<EntityId> = s.top_n(top_n).iter().collect();
                    pairwise_reachability_fraction(graph, &top, k)
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(ReachabilityRow {
                k,
                scorer: run.name.clone(),
                mean: mean(fractions),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetDifferenceRow {
    pub retriever: String,
    pub reranker: String,
    pub n: usize,
    pub mean: f64,
}

/// Mean set-difference ratio for each `(retriever, reranker)` index pair.
pub fn set_difference_table(runs: &[ScoredRun], pairs: &[(usize, usize)], n: usize) -> Result<Vec<SetDifferenceRow>> {
    pairs
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (&runs[i], &runs[j]);
            let ratios = a
                .sets
                .iter()
                .zip(&b.sets)
                .map(|(x, y)| set_difference_ratio(x, y, n))
                .collect::<Result<Vec<_>>>()?;
            Ok(SetDifferenceRow {
                retriever: a.name.clone(),
                reranker: b.name.clone(),
                n,
                mean: mean(ratios),
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    /// Entity of the input triple.
    Query,
    Predicted,
    /// Intermediate entity on a connecting path.
    Path,
}

impl NodeRole {
    fn color(self) -> &'static str {
        match self {
            NodeRole::Query => "red",
            NodeRole::Predicted => "green",
            NodeRole::Path => "blue",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictionSubgraph {
    pub nodes: Vec<(EntityId, NodeRole)>,
    /// Forward facts on the connecting paths.
    pub edges: Vec<Triple>,
}

/// Subgraph joining the query head (and answer, when given) with the top-n
/// predictions of `scores`: all simple paths of at most `max_hops` steps
/// between any two of those anchors.
pub fn export_prediction_subgraph(
    graph: &KnowledgeGraph,
    scores: &FuzzyScoreSet,
    top_n: usize,
    answer: Option<EntityId>,
    max_hops: usize,
) -> Result<PredictionSubgraph> {
    let head = scores.query().head;
    let mut roles: BTreeMap<EntityId, NodeRole> = BTreeMap::new();
    roles.insert(head, NodeRole::Query);
    if let Some(a) = answer {
        graph.check_entity(a)?;
        roles.insert(a, NodeRole::Query);
    }
    for e in scores.top_n(top_n).iter() {
        roles.entry(e).or_insert(NodeRole::Predicted);
    }
    let anchors: Vec<EntityId> = roles.keys().copied().collect();
    let limits = PathLimits {
        max_hops,
        max_paths: 100,
    };
    let mut edges = BTreeSet::new();
    for (i, &u) in anchors.iter().enumerate() {
        for &v in &anchors[i + 1..] {
            for path in enumerate_paths(graph, u, v, limits, None)? {
                for step in path.steps() {
                    edges.insert(step.normalized());
                    for e in [step.head, step.tail] {
                        roles.entry(e).or_insert(NodeRole::Path);
                    }
                }
            }
        }
    }
    let mut nodes: Vec<(EntityId, NodeRole)> = roles.into_iter().collect();
    nodes.sort_by_key(|&(e, role)| (role, e));
    Ok(PredictionSubgraph {
        nodes,
        edges: edges.into_iter().collect(),
    })
}

fn quoted(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl PredictionSubgraph {
    pub fn count(&self, role: NodeRole) -> usize {
        self.nodes.iter().filter(|(_, r)| *r == role).count()
    }

    pub fn to_dot(&self, graph: &KnowledgeGraph) -> String {
        let mut out = String::from("digraph predictions {\n  node [style=filled];\n");
        for &(e, role) in &self.nodes {
            let _ = writeln!(
                out,
                "  {} [fillcolor={}, role={}];",
                quoted(graph.entity_name(e)),
                role.color(),
                quoted(&format!("{role:?}").to_lowercase())
            );
        }
        for t in &self.edges {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                quoted(graph.entity_name(t.head)),
                quoted(graph.entity_name(t.tail)),
                quoted(&graph.relation_name(t.relation))
            );
        }
        out.push_str("}\n");
        out
    }
}
