//! Cascaded re-ranking: retriever scores, pool cutoff, re-scoring of the
//! pool, and fusion of the two score sets.
//!
//! Candidates left out of the pool are not discarded. They are ranked below
//! every pool member, in retriever order, so a full candidate list can still
//! be evaluated. The demotion is done by ordering tiers rather than by
//! rescaling scores.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{
    alpha_cut, answer_cut, combine_convex, combine_max, combine_min, CrispEntitySet, FuzzyScoreSet, Query, Weight,
};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::rules::{score_candidates, Scorer};

/// Lloyd iteration cap for the 1-D k-means cutoff.
pub const KMEANS_MAX_ITER: usize = 100;

/// How the retriever's ranking is truncated into the re-ranking pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffStrategy {
    /// Entities with retriever score at least `theta`.
    FixedThreshold {
        theta: f64,
    },
    /// The `k` best entities, ties by ascending id.
    TopK {
        k: usize,
    },
    /// 1-D k-means on retriever scores; keep the `m` clusters with the
    /// highest centroids.
    KMeans {
        k: usize,
        m: usize,
    },
    /// Cut exactly at the answer's retriever membership.
    IdealOracle,
    NoCutoff,
}

impl CutoffStrategy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CutoffStrategy::FixedThreshold { theta } if !(0.0..=1.0).contains(&theta) => {
                Err(Error::InvalidParameter(format!("threshold {theta} outside [0, 1]")))
            }
            CutoffStrategy::TopK { k: 0 } => Err(Error::InvalidParameter("top-k needs k >= 1".into())),
            CutoffStrategy::KMeans { k, m } if k < 2 || m < 1 || m > k => Err(Error::InvalidParameter(format!(
                "k-means needs k >= 2 and 1 <= m <= k, got k={k}, m={m}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CutoffStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CutoffStrategy::FixedThreshold { theta } => write!(f, "threshold({theta})"),
            CutoffStrategy::TopK { k } => write!(f, "top-k({k})"),
            CutoffStrategy::KMeans { k, m } => write!(f, "k-means({m} of {k})"),
            CutoffStrategy::IdealOracle => f.write_str("ideal"),
            CutoffStrategy::NoCutoff => f.write_str("none"),
        }
    }
}

/// How pool scores are produced from the two scorers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CombineStrategy {
    /// Re-ranker scores replace retriever scores.
    ReplaceScores,
    Intersection,
    Union,
    /// `w * retriever + (1 - w) * reranker`.
    Mean {
        weight: f64,
    },
}

impl Default for CombineStrategy {
    fn default() -> Self {
        CombineStrategy::Mean { weight: 0.5 }
    }
}

impl fmt::Display for CombineStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CombineStrategy::ReplaceScores => f.write_str("replace"),
            CombineStrategy::Intersection => f.write_str("min"),
            CombineStrategy::Union => f.write_str("max"),
            CombineStrategy::Mean { weight } => write!(f, "mean({weight})"),
        }
    }
}

impl FromStr for CombineStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replace" => Ok(CombineStrategy::ReplaceScores),
            "min" | "intersection" => Ok(CombineStrategy::Intersection),
            "max" | "union" => Ok(CombineStrategy::Union),
            "mean" => Ok(CombineStrategy::default()),
            other => Err(Error::InvalidParameter(format!("unknown combine strategy `{other}`"))),
        }
    }
}

/// Result of 1-D Lloyd clustering.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<f64>,
    /// Cluster index per input value.
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

/// Deterministic 1-D k-means. Seeds sit at the `(i + 0.5) / k` quantiles
/// (linear interpolation) of the sorted values; points go to the nearest
/// centroid, ties to the lower index; an empty cluster keeps its centroid.
/// Stops when assignments no longer change or after `max_iter` rounds.
pub fn kmeans_1d(values: &[f64], k: usize, max_iter: usize) -> Clustering {
    if values.is_empty() || k == 0 {
        return Clustering {
            centroids: Vec::new(),
            assignments: Vec::new(),
            iterations: 0,
        };
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut centroids: Vec<f64> = (0..k)
        .map(|i| {
            let pos = (i as f64 + 0.5) / k as f64 * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        })
        .collect();

    let nearest = |centroids: &[f64], v: f64| {
        let mut best = 0;
        for (j, c) in centroids.iter().enumerate().skip(1) {
            if (v - c).abs() < (v - centroids[best]).abs() {
                best = j;
            }
        }
        best
    };
    let mut assignments: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&v, &a) in values.iter().zip(&assignments) {
            sums[a] += v;
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
        let next: Vec<usize> = values.iter().map(|&v| nearest(&centroids, v)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Clustering {
        centroids,
        assignments,
        iterations,
    }
}

/// Entities handed to the re-ranker.
pub fn select_pool(
    retrieved: &FuzzyScoreSet,
    cutoff: &CutoffStrategy,
    answer: Option<EntityId>,
) -> Result<CrispEntitySet> {
    cutoff.validate()?;
    match *cutoff {
        CutoffStrategy::FixedThreshold { theta } => Ok(alpha_cut(retrieved, theta)),
        CutoffStrategy::TopK { k } => Ok(retrieved.top_n(k)),
        CutoffStrategy::KMeans { k, m } => {
            let entries: Vec<(EntityId, f64)> = retrieved.iter().collect();
            let values: Vec<f64> = entries.iter().map(|e| e.1).collect();
            let clustering = kmeans_1d(&values, k, KMEANS_MAX_ITER);
            let mut occupied: Vec<usize> = clustering.assignments.clone();
            occupied.sort_unstable();
            occupied.dedup();
            occupied.sort_by(|&a, &b| {
                clustering.centroids[b]
                    .total_cmp(&clustering.centroids[a])
                    .then(a.cmp(&b))
            });
            let keep = &occupied[..m.min(occupied.len())];
            Ok(entries
                .iter()
                .zip(&clustering.assignments)
                .filter(|(_, a)| keep.contains(a))
                .map(|((e, _), _)| *e)
                .collect())
        }
        CutoffStrategy::IdealOracle => answer_cut(retrieved, answer.ok_or(Error::AnswerMissing)?),
        CutoffStrategy::NoCutoff => Ok(retrieved.support()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub entity: EntityId,
    /// 0 for pool members, 1 for demoted candidates.
    pub tier: u8,
    pub score: f64,
}

impl RankedEntry {
    /// Ordering where `Less` means ranked ahead.
    fn precedence(&self, other: &Self) -> Ordering {
        self.tier.cmp(&other.tier).then(other.score.total_cmp(&self.score))
    }
}

/// Final candidate order: tier, then descending score, then ascending id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidates {
    entries: Vec<RankedEntry>,
}

impl RankedCandidates {
    pub fn from_score_set(set: &FuzzyScoreSet) -> Self {
        Self::tiered(Some(set), None)
    }

    pub fn tiered(pool: Option<&FuzzyScoreSet>, rest: Option<&FuzzyScoreSet>) -> Self {
        let mut entries: Vec<RankedEntry> = [pool, rest]
            .into_iter()
            .enumerate()
            .flat_map(|(tier, set)| {
                set.into_iter().flat_map(move |s| {
                    s.iter().map(move |(entity, score)| RankedEntry {
                        entity,
                        tier: tier as u8,
                        score,
                    })
                })
            })
            .collect();
        entries.sort_by(|a, b| a.precedence(b).then(a.entity.cmp(&b.entity)));
        RankedCandidates { entries }
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn order(&self) -> Vec<EntityId> {
        self.entries.iter().map(|e| e.entity).collect()
    }

    /// 1-based rank with ties counted against the answer: one plus the
    /// number of other candidates ranked ahead of or level with it.
    pub fn rank_of(&self, answer: EntityId) -> Result<usize> {
        let target = self
            .entries
            .iter()
            .find(|e| e.entity == answer)
            .ok_or(Error::AnswerNotInSet(answer.0))?;
        Ok(1 + self
            .entries
            .iter()
            .filter(|e| e.entity != answer && e.precedence(target) != Ordering::Greater)
            .count())
    }
}

/// Produces a final candidate ranking for one query.
pub trait Predictor: Send + Sync {
    fn rank(
        &self,
        graph: &KnowledgeGraph,
        query: Query,
        candidates: &[EntityId],
        answer: Option<EntityId>,
    ) -> Result<RankedCandidates>;
}

/// A lone scorer used as a predictor.
#[derive(Clone)]
pub struct SingleScorer(pub Arc<dyn Scorer>);

impl Predictor for SingleScorer {
    fn rank(
        &self,
        graph: &KnowledgeGraph,
        query: Query,
        candidates: &[EntityId],
        _answer: Option<EntityId>,
    ) -> Result<RankedCandidates> {
        let set = score_candidates(self.0.as_ref(), graph, query, candidates)?;
        Ok(RankedCandidates::from_score_set(&set))
    }
}

#[derive(Clone)]
pub struct RerankPipeline {
    pub retriever: Arc<dyn Scorer>,
    pub reranker: Arc<dyn Scorer>,
    pub cutoff: CutoffStrategy,
    pub combine: CombineStrategy,
}

/// Everything produced while re-ranking one query.
#[derive(Clone, Debug)]
pub struct RerankOutcome {
    pub retrieved: FuzzyScoreSet,
    pub pool: CrispEntitySet,
    /// Re-ranker scores over the pool; `None` when the pool is empty.
    pub rescored: Option<FuzzyScoreSet>,
    /// Fused pool scores; `None` when the pool is empty.
    pub fused: Option<FuzzyScoreSet>,
    pub ranking: RankedCandidates,
}

impl RerankPipeline {
    pub fn new(
        retriever: Arc<dyn Scorer>,
        reranker: Arc<dyn Scorer>,
        cutoff: CutoffStrategy,
        combine: CombineStrategy,
    ) -> Result<Self> {
        cutoff.validate()?;
        if let CombineStrategy::Mean { weight } = combine {
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::InvalidParameter(format!("weight {weight} outside [0, 1]")));
            }
        }
        Ok(RerankPipeline {
            retriever,
            reranker,
            cutoff,
            combine,
        })
    }

    pub fn rerank_query(
        &self,
        graph: &KnowledgeGraph,
        query: Query,
        candidates: &[EntityId],
        answer: Option<EntityId>,
    ) -> Result<RerankOutcome> {
        let retrieved = score_candidates(self.retriever.as_ref(), graph, query, candidates)?;
        rerank_scored(retrieved, self.cutoff, self.combine, answer, |members| {
            score_candidates(self.reranker.as_ref(), graph, query, members)
        })
    }
}

/// The cascade on an already scored query: cut the pool, re-score it with
/// `rescore`, fuse, and demote everything outside the pool.
pub fn rerank_scored(
    retrieved: FuzzyScoreSet,
    cutoff: CutoffStrategy,
    combine: CombineStrategy,
    answer: Option<EntityId>,
    rescore: impl FnOnce(&[EntityId]) -> Result<FuzzyScoreSet>,
) -> Result<RerankOutcome> {
    let pool = select_pool(&retrieved, &cutoff, answer)?;
    let outside: CrispEntitySet = retrieved
        .iter()
        .map(|(e, _)| e)
        .filter(|e| !pool.contains(*e))
        .collect();
    let rest = retrieved.restrict(&outside);
    if pool.is_empty() {
        let ranking = RankedCandidates::tiered(None, rest.as_ref());
        return Ok(RerankOutcome {
            retrieved,
            pool,
            rescored: None,
            fused: None,
            ranking,
        });
    }
    let members: Vec<EntityId> = pool.iter().collect();
    let rescored = rescore(&members)?;
    let retrieved_pool = retrieved.restrict(&pool).expect("pool is a non-empty subset");
    let fused = match combine {
        CombineStrategy::ReplaceScores => rescored.clone(),
        CombineStrategy::Intersection => combine_min(&retrieved_pool, &rescored)?,
        CombineStrategy::Union => combine_max(&retrieved_pool, &rescored)?,
        CombineStrategy::Mean { weight } => combine_convex(&retrieved_pool, &rescored, &Weight::Constant(weight))?,
    };
    let ranking = RankedCandidates::tiered(Some(&fused), rest.as_ref());
    Ok(RerankOutcome {
        retrieved,
        pool,
        rescored: Some(rescored),
        fused: Some(fused),
        ranking,
    })
}

impl Predictor for RerankPipeline {
    fn rank(
        &self,
        graph: &KnowledgeGraph,
        query: Query,
        candidates: &[EntityId],
        answer: Option<EntityId>,
    ) -> Result<RankedCandidates> {
        Ok(self.rerank_query(graph, query, candidates, answer)?.ranking)
    }
}

fn check_top_n(a: &FuzzyScoreSet, b: &FuzzyScoreSet, n: usize) -> Result<()> {
    if a.query() != b.query() {
        return Err(Error::QueryMismatch);
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    Ok(())
}

/// `|top_n(A) ∩ top_n(B)| / n`. When `n` exceeds a support, that set's
/// top-n is its whole support and the denominator stays `n`.
pub fn top_n_intersection_ratio(a: &FuzzyScoreSet, b: &FuzzyScoreSet, n: usize) -> Result<f64> {
    check_top_n(a, b, n)?;
    Ok(a.top_n(n).intersection_len(&b.top_n(n)) as f64 / n as f64)
}

/// `|top_n(S_I) \ top_n(S_R)| / |top_n(S_I)|`.
pub fn set_difference_ratio(retrieved: &FuzzyScoreSet, rescored: &FuzzyScoreSet, n: usize) -> Result<f64> {
    check_top_n(retrieved, rescored, n)?;
    let a = retrieved.top_n(n);
    Ok(a.difference_len(&rescored.top_n(n)) as f64 / a.len() as f64)
}

/// Sizes of the answer cuts of retriever (A) and re-ranker (B) and of the
/// re-ranked cut `S' = { t in A | mu_R(t) >= mu_R(answer) }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub retriever_cut: usize,
    pub reranker_cut: usize,
    pub reranked_cut: usize,
    /// A ⊆ B
    pub retriever_within_reranker: bool,
    /// B ⊆ A
    pub reranker_within_retriever: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundViolation {
    /// |S'| > |B|
    RerankedExceedsReranker,
    /// A ⊆ B but |S'| != |B|
    SubsetWithoutEquality,
    /// A ⊄ B but |S'| >= |B|
    NonSubsetWithoutStrictGain,
}

impl BoundReport {
    /// Checks the three asserted relations: `|S'| <= |B|`;
    /// `A ⊆ B => |S'| = |B|`; `A ⊄ B => |S'| < |B|`.
    pub fn violations(&self) -> Vec<BoundViolation> {
        let mut out = Vec::new();
        if self.reranked_cut > self.reranker_cut {
            out.push(BoundViolation::RerankedExceedsReranker);
        }
        if self.retriever_within_reranker && self.reranked_cut != self.reranker_cut {
            out.push(BoundViolation::SubsetWithoutEquality);
        }
        if !self.retriever_within_reranker && self.reranked_cut >= self.reranker_cut {
            out.push(BoundViolation::NonSubsetWithoutStrictGain);
        }
        out
    }

    /// Since `S' = A ∩ B`: `|S'| = |B|` exactly when `B ⊆ A`, and
    /// `|S'| < |B|` otherwise.
    pub fn matches_containment(&self) -> bool {
        if self.reranker_within_retriever {
            self.reranked_cut == self.reranker_cut
        } else {
            self.reranked_cut < self.reranker_cut
        }
    }
}

pub fn verify_rerank_bounds(
    retrieved: &FuzzyScoreSet,
    rescored: &FuzzyScoreSet,
    answer: EntityId,
) -> Result<BoundReport> {
    let (Some(_), Some(threshold)) = (retrieved.get(answer), rescored.get(answer)) else {
        return Err(Error::AnswerMissing);
    };
    let a = answer_cut(retrieved, answer)?;
    let b = answer_cut(rescored, answer)?;
    let reranked = a.iter().filter(|&t| rescored.membership(t) >= threshold).count();
    Ok(BoundReport {
        retriever_cut: a.len(),
        reranker_cut: b.len(),
        reranked_cut: reranked,
        retriever_within_reranker: a.is_subset(&b),
        reranker_within_retriever: b.is_subset(&a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::RelationId;
    use crate::rules::ExternalScores;
    use proptest::prelude::*;

    fn q() -> Query {
        Query::new(EntityId(100), RelationId::forward(0))
    }

    fn set(values: &[(u32, f64)]) -> FuzzyScoreSet {
        FuzzyScoreSet::new(q(), values.iter().map(|&(e, m)| (EntityId(e), m))).unwrap()
    }

    fn ids(v: &[u32]) -> CrispEntitySet {
        v.iter().map(|&e| EntityId(e)).collect()
    }

    #[test]
    fn top_k_and_threshold_pools() {
        let s = set(&[(0, 0.9), (1, 0.8), (2, 0.7)]);
        assert_eq!(
            select_pool(&s, &CutoffStrategy::TopK { k: 2 }, None).unwrap(),
            ids(&[0, 1])
        );
        assert_eq!(
            select_pool(&s, &CutoffStrategy::TopK { k: 9 }, None).unwrap(),
            ids(&[0, 1, 2])
        );
        let s = set(&[(0, 0.9), (1, 0.4)]);
        assert_eq!(
            select_pool(&s, &CutoffStrategy::FixedThreshold { theta: 0.5 }, None).unwrap(),
            ids(&[0])
        );
        // ties at the k boundary go to the lower id
        let s = set(&[(3, 0.5), (1, 0.5), (2, 0.5)]);
        assert_eq!(
            select_pool(&s, &CutoffStrategy::TopK { k: 2 }, None).unwrap(),
            ids(&[1, 2])
        );
    }

    #[test]
    fn kmeans_worked_example() {
        // seeds .12 and .9; .5 joins the low cluster (centroid .24 vs .925)
        let c = kmeans_1d(&[0.95, 0.9, 0.5, 0.12, 0.1], 2, KMEANS_MAX_ITER);
        assert_eq!(c.assignments, vec![1, 1, 0, 0, 0]);
        assert!((c.centroids[0] - 0.24).abs() < 1e-12);
        assert!((c.centroids[1] - 0.925).abs() < 1e-12);
        let s = set(&[(0, 0.95), (1, 0.9), (2, 0.5), (3, 0.12), (4, 0.1)]);
        let pool = select_pool(&s, &CutoffStrategy::KMeans { k: 2, m: 1 }, None).unwrap();
        assert_eq!(pool, ids(&[0, 1]));
    }

    #[test]
    fn kmeans_with_duplicates_keeps_empty_clusters_still() {
        let c = kmeans_1d(&[0.5, 0.5, 0.5], 3, KMEANS_MAX_ITER);
        assert_eq!(c.assignments, vec![0, 0, 0]);
        let s = set(&[(0, 0.5), (1, 0.5), (2, 0.5)]);
        let pool = select_pool(&s, &CutoffStrategy::KMeans { k: 3, m: 1 }, None).unwrap();
        assert_eq!(pool.len(), 3);
    }

    #[test]
    fn strategy_validation() {
        let s = set(&[(0, 0.5)]);
        assert!(select_pool(&s, &CutoffStrategy::TopK { k: 0 }, None).is_err());
        assert!(select_pool(&s, &CutoffStrategy::KMeans { k: 1, m: 1 }, None).is_err());
        assert!(select_pool(&s, &CutoffStrategy::KMeans { k: 3, m: 4 }, None).is_err());
        assert!(select_pool(&s, &CutoffStrategy::FixedThreshold { theta: 1.5 }, None).is_err());
        assert!(matches!(
            select_pool(&s, &CutoffStrategy::IdealOracle, None),
            Err(Error::AnswerMissing)
        ));
    }

    #[test]
    fn ranking_ties_are_pessimistic() {
        let r = RankedCandidates::from_score_set(&set(&[(0, 0.9), (1, 0.5), (2, 0.5), (3, 0.1)]));
        assert_eq!(r.rank_of(EntityId(0)).unwrap(), 1);
        assert_eq!(r.rank_of(EntityId(1)).unwrap(), 3);
        assert_eq!(r.rank_of(EntityId(2)).unwrap(), 3);
        assert_eq!(r.rank_of(EntityId(3)).unwrap(), 4);
        assert_eq!(r.order(), vec![EntityId(0), EntityId(1), EntityId(2), EntityId(3)]);
        // demoted tier ranks below pool members regardless of score
        let r = RankedCandidates::tiered(Some(&set(&[(0, 0.1)])), Some(&set(&[(1, 0.9)])));
        assert_eq!(r.rank_of(EntityId(1)).unwrap(), 2);
    }

    fn table(rows: &[(&str, f64)]) -> Arc<dyn Scorer> {
        let text: String = rows.iter().map(|(t, s)| format!("h\tr\t{t}\t{s}\n")).collect();
        Arc::new(ExternalScores::from_reader(text.as_bytes(), "t", 0.0).unwrap())
    }

    fn toy_graph() -> KnowledgeGraph {
        let text: String = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|t| format!("h\tr\t{t}\n"))
            .collect();
        crate::kg::build_graph(crate::kg::TripleFile::from_str_triples(&text).unwrap())
    }

    #[test]
    fn trace_top_k_replace() {
        // retriever: a .9, b .8, c .7 (answer), d .6, e .5
        // re-ranker inside top-3: c .95 > a .4 > b .3
        let g = toy_graph();
        let retriever = table(&[("a", 0.9), ("b", 0.8), ("c", 0.7), ("d", 0.6), ("e", 0.5)]);
        let reranker = table(&[("a", 0.4), ("b", 0.3), ("c", 0.95), ("d", 0.99), ("e", 0.99)]);
        let p = RerankPipeline::new(
            retriever,
            reranker,
            CutoffStrategy::TopK { k: 3 },
            CombineStrategy::ReplaceScores,
        )
        .unwrap();
        let query = Query::new(g.entity("h").unwrap(), g.relation("r").unwrap());
        let cands: Vec<EntityId> = ["a", "b", "c", "d", "e"].iter().map(|n| g.entity(n).unwrap()).collect();
        let c = g.entity("c").unwrap();
        let out = p.rerank_query(&g, query, &cands, Some(c)).unwrap();
        assert_eq!(out.pool.len(), 3);
        assert_eq!(out.ranking.rank_of(c).unwrap(), 1);
        let order: Vec<&str> = out.ranking.order().into_iter().map(|e| g.entity_name(e)).collect();
        assert_eq!(order, ["c", "a", "b", "d", "e"]);
    }

    #[test]
    fn ideal_singleton_pool() {
        let g = toy_graph();
        let retriever = table(&[("a", 0.9), ("b", 0.8)]);
        let reranker = table(&[("a", 0.1), ("b", 0.9)]);
        let p = RerankPipeline::new(
            retriever,
            reranker,
            CutoffStrategy::IdealOracle,
            CombineStrategy::ReplaceScores,
        )
        .unwrap();
        let query = Query::new(g.entity("h").unwrap(), g.relation("r").unwrap());
        let [a, b] = ["a", "b"].map(|n| g.entity(n).unwrap());
        let out = p.rerank_query(&g, query, &[a, b], Some(a)).unwrap();
        assert_eq!(out.pool, [a].into_iter().collect());
        assert_eq!(out.ranking.rank_of(a).unwrap(), 1);
    }

    #[test]
    fn no_cutoff_mean_is_convex_combination() {
        let g = toy_graph();
        let retriever = table(&[("a", 0.9), ("b", 0.2), ("c", 0.6)]);
        let reranker = table(&[("a", 0.1), ("b", 0.8), ("c", 0.6)]);
        let p = RerankPipeline::new(
            retriever.clone(),
            reranker.clone(),
            CutoffStrategy::NoCutoff,
            CombineStrategy::default(),
        )
        .unwrap();
        let query = Query::new(g.entity("h").unwrap(), g.relation("r").unwrap());
        let cands: Vec<EntityId> = ["a", "b", "c"].iter().map(|n| g.entity(n).unwrap()).collect();
        let out = p.rerank_query(&g, query, &cands, None).unwrap();
        let si = score_candidates(retriever.as_ref(), &g, query, &cands).unwrap();
        let sr = score_candidates(reranker.as_ref(), &g, query, &cands).unwrap();
        assert_eq!(
            out.fused.unwrap(),
            combine_convex(&si, &sr, &Weight::Constant(0.5)).unwrap()
        );
    }

    #[test]
    fn empty_pool_falls_back_to_retriever_order() {
        let g = toy_graph();
        let retriever = table(&[("a", 0.3), ("b", 0.2)]);
        let reranker = table(&[("a", 0.0), ("b", 1.0)]);
        let p = RerankPipeline::new(
            retriever,
            reranker,
            CutoffStrategy::FixedThreshold { theta: 0.9 },
            CombineStrategy::ReplaceScores,
        )
        .unwrap();
        let query = Query::new(g.entity("h").unwrap(), g.relation("r").unwrap());
        let [a, b] = ["a", "b"].map(|n| g.entity(n).unwrap());
        let out = p.rerank_query(&g, query, &[a, b], None).unwrap();
        assert!(out.pool.is_empty() && out.fused.is_none());
        assert_eq!(out.ranking.order(), vec![a, b]);
    }

    #[test]
    fn ratios() {
        let a = set(&[(0, 0.9), (1, 0.8), (2, 0.7), (3, 0.1)]);
        let b = set(&[(0, 0.1), (1, 0.8), (2, 0.7), (3, 0.9)]);
        assert_eq!(set_difference_ratio(&a, &a, 3).unwrap(), 0.0);
        assert!((set_difference_ratio(&a, &b, 3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((top_n_intersection_ratio(&a, &b, 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(top_n_intersection_ratio(&a, &a, 3).unwrap(), 1.0);
        let c = set(&[(0, 0.1), (1, 0.1), (2, 0.1), (3, 0.9), (4, 0.9), (5, 0.9)]);
        assert_eq!(top_n_intersection_ratio(&a, &c, 3).unwrap(), 0.0);
        assert_eq!(set_difference_ratio(&a, &c, 3).unwrap(), 1.0);
        // n beyond the support: whole supports, denominator n
        assert_eq!(top_n_intersection_ratio(&a, &a, 8).unwrap(), 0.5);
    }

    #[test]
    fn bounds_on_fixed_cases() {
        let s = set(&[(0, 0.9), (1, 0.5), (2, 0.4)]);
        let r = verify_rerank_bounds(&s, &s, EntityId(1)).unwrap();
        assert_eq!(r.reranked_cut, r.reranker_cut);
        assert!(r.violations().is_empty());

        let si = set(&[(0, 0.2), (1, 0.9), (2, 0.4)]);
        let sr = set(&[(0, 0.9), (1, 0.5), (2, 0.4)]);
        let r = verify_rerank_bounds(&si, &sr, EntityId(1)).unwrap();
        assert_eq!((r.retriever_cut, r.reranked_cut, r.reranker_cut), (1, 1, 2));
        assert!(r.matches_containment());
        // A = {answer} ⊂ B, yet |S'| = 1 < |B| = 2
        assert_eq!(r.violations(), vec![BoundViolation::SubsetWithoutEquality]);

        assert!(matches!(
            verify_rerank_bounds(&si, &set(&[(0, 0.1)]), EntityId(1)),
            Err(Error::AnswerMissing)
        ));
    }

    fn arb_pair() -> impl Strategy<Value = (FuzzyScoreSet, FuzzyScoreSet, EntityId)> {
        (2usize..9).prop_flat_map(|n| {
            (
                prop::collection::vec(0u8..=10, n),
                prop::collection::vec(0u8..=10, n),
                0..n,
            )
                .prop_map(|(x, y, ans)| {
                    let mk = |v: Vec<u8>| {
                        FuzzyScoreSet::new(
                            q(),
                            v.into_iter()
                                .enumerate()
                                .map(|(i, s)| (EntityId(i as u32), s as f64 / 10.0)),
                        )
                        .unwrap()
                    };
                    (mk(x), mk(y), EntityId(ans as u32))
                })
        })
    }

    proptest! {
        #[test]
        fn bounds_match_brute_force((si, sr, ans) in arb_pair()) {
            let report = verify_rerank_bounds(&si, &sr, ans).unwrap();
            // oracle: enumerate entities directly
            let a: Vec<_> = si.iter().filter(|&(_, m)| m >= si.membership(ans)).map(|(e, _)| e).collect();
            let b: Vec<_> = sr.iter().filter(|&(_, m)| m >= sr.membership(ans)).map(|(e, _)| e).collect();
            let both = a.iter().filter(|e| b.contains(e)).count();
            prop_assert_eq!(report.reranked_cut, both);
            prop_assert!(report.reranked_cut <= report.reranker_cut);
            prop_assert!(report.matches_containment());
            if report.reranker_cut < report.retriever_cut {
                prop_assert!(report.reranked_cut <= report.reranker_cut);
            }
        }

        #[test]
        fn ideal_replace_never_worse_than_reranker((si, sr, ans) in arb_pair()) {
            let pool = select_pool(&si, &CutoffStrategy::IdealOracle, Some(ans)).unwrap();
            let outside: CrispEntitySet = si.iter().map(|(e, _)| e).filter(|e| !pool.contains(*e)).collect();
            let ranking = RankedCandidates::tiered(sr.restrict(&pool).as_ref(), si.restrict(&outside).as_ref());
            let alone = RankedCandidates::from_score_set(&sr);
            prop_assert!(ranking.rank_of(ans).unwrap() <= alone.rank_of(ans).unwrap());
        }

        #[test]
        fn ratio_symmetry_and_scale_invariance((si, sr, _a) in arb_pair(), n in 1usize..6) {
            prop_assert_eq!(
                top_n_intersection_ratio(&si, &sr, n).unwrap(),
                top_n_intersection_ratio(&sr, &si, n).unwrap()
            );
            prop_assert_eq!(set_difference_ratio(&si, &si, n).unwrap(), 0.0);
            let squashed = FuzzyScoreSet::new(q(), si.iter().map(|(e, m)| (e, m * m * 0.5))).unwrap();
            prop_assert_eq!(
                set_difference_ratio(&si, &sr, n).unwrap(),
                set_difference_ratio(&squashed, &sr, n).unwrap()
            );
        }

        #[test]
        fn rank_equals_answer_cut((si, _sr, ans) in arb_pair()) {
            let rank = RankedCandidates::from_score_set(&si).rank_of(ans).unwrap();
            prop_assert_eq!(rank, answer_cut(&si, ans).unwrap().len());
        }
    }
}
