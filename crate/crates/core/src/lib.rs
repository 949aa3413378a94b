//! Inductive link prediction by cascaded re-ranking.
//!
//! Two path-rule scorers mined with different hop limits score the same
//! candidate tails. A cheaper retriever produces a fuzzy score set, a cutoff
//! strategy selects the pool, and a second scorer re-scores the pool; the
//! two score sets are fused with crisp replacement or fuzzy min/max/convex
//! operators. The crate also carries the evaluation protocol (sampled
//! negatives, Hits@k, MRR) and the diagnostics used to choose scorer pairs:
//! top-n overlap, k-hop reachability of predictions and the set-difference
//! ratio.

pub mod analysis;
pub mod error;
pub mod eval;
pub mod fuzzy;
pub mod kg;
mod par;
pub mod paths;
pub mod rerank;
pub mod rules;
pub mod synth;

pub use error::{Error, Result};
pub use fuzzy::{CrispEntitySet, FuzzyScoreSet, Query, Weight};
pub use kg::{EntityId, InductiveSplit, KnowledgeGraph, RelationId, Triple, TripleFile};
pub use rerank::{CombineStrategy, CutoffStrategy, RankedCandidates, RerankPipeline};
pub use rules::{ExternalScores, MiningConfig, Rule, RuleBase, Scorer};
