//! Evaluation protocol: each test fact `(h, r, t)` is ranked against
//! sampled negative tails, and ranks are summarized as Hits@k and MRR.
//!
//! Negatives are drawn with ChaCha8 (`rand_chacha`), seeded per query from
//! the run seed and the query index, so candidate lists do not depend on
//! platform or worker count.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyScoreSet, Query};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::par;
use crate::rerank::{CombineStrategy, CutoffStrategy, Predictor, RankedCandidates, RerankPipeline};
use crate::rules::Scorer;

/// Which known facts disqualify a negative tail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeFilter {
    /// Any entity but the answer may be a negative.
    None,
    /// Skip tails `t'` with `(h, r, t')` in the graph.
    #[default]
    Graph,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub triple: Triple,
    /// The answer first, then negatives in draw order.
    pub candidates: Vec<EntityId>,
    pub seed: u64,
}

impl EvalQuery {
    pub fn query(&self) -> Query {
        Query::new(self.triple.head, self.triple.relation)
    }

    pub fn answer(&self) -> EntityId {
        self.triple.tail
    }
}

/// Per-query seed derived from the run seed.
pub fn query_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Draws `n` distinct negative tails uniformly without replacement.
pub fn sample_negatives(
    graph: &KnowledgeGraph,
    triple: Triple,
    n: usize,
    seed: u64,
    filter: NegativeFilter,
) -> Result<EvalQuery> {
    graph.check_entity(triple.head)?;
    graph.check_entity(triple.tail)?;
    let eligible: Vec<EntityId> = graph
        .entity_ids()
        .filter(|&e| e != triple.tail)
        .filter(|&e| match filter {
            NegativeFilter::None => true,
            NegativeFilter::Graph => !graph.contains(Triple::new(triple.head, triple.relation, e)),
        })
        .collect();
    if eligible.len() < n {
        return Err(Error::NotEnoughEntities {
            needed: n,
            available: eligible.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = Vec::with_capacity(n + 1);
    candidates.push(triple.tail);
    candidates.extend(
        rand::seq::index::sample(&mut rng, eligible.len(), n)
            .into_iter()
            .map(|i| eligible[i]),
    );
    Ok(EvalQuery {
        triple,
        candidates,
        seed,
    })
}

pub fn build_queries(
    graph: &KnowledgeGraph,
    triples: &[Triple],
    negatives: usize,
    seed: u64,
    filter: NegativeFilter,
) -> Result<Vec<EvalQuery>> {
    triples
        .iter()
        .enumerate()
        .map(|(i, &t)| sample_negatives(graph, t, negatives, query_seed(seed, i), filter))
        .collect()
}

/// Pessimistic rank of the answer in a score set; equals the size of the
/// answer's alpha-cut.
pub fn rank_of_answer(set: &FuzzyScoreSet, answer: EntityId) -> Result<usize> {
    RankedCandidates::from_score_set(set).rank_of(answer)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub head: String,
    pub relation: String,
    pub answer: String,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub queries: Vec<QueryOutcome>,
    pub hits_at_1: f64,
    pub hits_at_3: f64,
    pub hits_at_10: f64,
    pub mrr: f64,
}

impl EvalReport {
    pub fn from_outcomes(label: impl Into<String>, queries: Vec<QueryOutcome>) -> Self {
        let n = queries.len().max(1) as f64;
        let hits = |k: usize| queries.iter().filter(|q| q.rank <= k).count() as f64 / n;
        let mrr = queries.iter().map(|q| 1.0 / q.rank as f64).sum::<f64>() / n;
        EvalReport {
            label: label.into(),
            hits_at_1: hits(1),
            hits_at_3: hits(3),
            hits_at_10: hits(10),
            mrr,
            queries,
        }
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.queries.iter().map(|q| q.rank).collect()
    }
}

/// Ranks every query's candidates and aggregates. The answer is passed to
/// the predictor only so that the ideal cutoff can see it.
pub fn evaluate(
    predictor: &dyn Predictor,
    graph: &KnowledgeGraph,
    queries: &[EvalQuery],
    label: &str,
    workers: usize,
) -> Result<EvalReport> {
    let outcomes = par::map_indexed(workers, queries.len(), |i| {
        let q = &queries[i];
        let ranking = predictor.rank(graph, q.query(), &q.candidates, Some(q.answer()))?;
        Ok(QueryOutcome {
            head: graph.entity_name(q.triple.head).to_owned(),
            relation: graph.relation_name(q.triple.relation).into_owned(),
            answer: graph.entity_name(q.answer()).to_owned(),
            rank: ranking.rank_of(q.answer())?,
        })
    })?;
    Ok(EvalReport::from_outcomes(label, outcomes))
}

/// Threshold grid 0.05, 0.10, ..., 0.95.
pub fn threshold_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Picks the fixed threshold with the best Hits@1 on development queries,
/// using replacement scoring inside the pool. Ties go to the smaller
/// threshold.
pub fn fit_threshold(
    retriever: Arc<dyn Scorer>,
    reranker: Arc<dyn Scorer>,
    graph: &KnowledgeGraph,
    queries: &[EvalQuery],
    grid: &[f64],
    workers: usize,
) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for &theta in grid {
        let pipeline = RerankPipeline::new(
            retriever.clone(),
            reranker.clone(),
            CutoffStrategy::FixedThreshold { theta },
            CombineStrategy::ReplaceScores,
        )?;
        let report = evaluate(&pipeline, graph, queries, "dev", workers)?;
        if best.is_none_or(|(_, h)| report.hits_at_1 > h) {
            best = Some((theta, report.hits_at_1));
        }
    }
    best.map(|(t, _)| t)
        .ok_or_else(|| Error::InvalidParameter("empty threshold grid".into()))
}
