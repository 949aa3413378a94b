//! Criteria checked directly against the library.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rerank_kg::analysis::{all_entity_candidates, intersection_table, reachability_table, score_run, ScoredRun};
use rerank_kg::eval::{build_queries, evaluate, rank_of_answer, EvalQuery, NegativeFilter};
use rerank_kg::fuzzy::{answer_cut, combine_convex, combine_max, combine_min};
use rerank_kg::kg::{build_graph, validate_split, InductiveSplit};
use rerank_kg::paths::RelationPath;
use rerank_kg::rerank::{verify_rerank_bounds, Predictor, SingleScorer};
use rerank_kg::rules::{mine_rules, score_candidates};
use rerank_kg::synth::{generate, SynthConfig, SynthDataset};
use rerank_kg::{
    CombineStrategy, CutoffStrategy, EntityId, ExternalScores, FuzzyScoreSet, KnowledgeGraph, MiningConfig, Query,
    RelationId, RerankPipeline, Scorer, Triple, TripleFile, Weight,
};

use crate::Outcome;

fn graph(text: &str) -> KnowledgeGraph {
    build_graph(TripleFile::from_str_triples(text).expect("fixture parses"))
}

fn membership(rng: &mut ChaCha8Rng) -> f64 {
    // coarse values half the time so ties are common
    if rng.random_bool(0.5) {
        rng.random_range(0..=10) as f64 / 10.0
    } else {
        rng.random::<f64>()
    }
}

fn random_pair(rng: &mut ChaCha8Rng, size: usize) -> (FuzzyScoreSet, FuzzyScoreSet) {
    let q = Query::new(EntityId(1000), RelationId::forward(0));
    let a = FuzzyScoreSet::new(q, (0..size as u32).map(|e| (EntityId(e), membership(rng)))).unwrap();
    let b = FuzzyScoreSet::new(q, (0..size as u32).map(|e| (EntityId(e), membership(rng)))).unwrap();
    (a, b)
}

fn bound_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fixtures = 10_000;
    let (mut over, mut subset_cases, mut subset_bad, mut other_cases, mut other_bad, mut corrected_bad) =
        (0, 0, 0, 0, 0, 0);
    for _ in 0..fixtures {
        let size = rng.random_range(5..=50);
        let (si, sr) = random_pair(&mut rng, size);
        let answer = EntityId(rng.random_range(0..size as u32));
        let report = verify_rerank_bounds(&si, &sr, answer).unwrap();
        if report.reranked_cut > report.reranker_cut {
            over += 1;
        }
        if report.retriever_within_reranker {
            subset_cases += 1;
            if report.reranked_cut != report.reranker_cut {
                subset_bad += 1;
            }
        } else {
            other_cases += 1;
            if report.reranked_cut >= report.reranker_cut {
                other_bad += 1;
            }
        }
        if !report.matches_containment() {
            corrected_bad += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: over == 0 && subset_bad == 0 && other_bad == 0 && secs < 10.0,
        detail: format!(
            "{fixtures} fixtures in {secs:.2}s; |S'| > |cut(S_R)|: {over}; \
             cut(S_I) ⊆ cut(S_R) without |S'| = |cut(S_R)|: {subset_bad}/{subset_cases}; \
             cut(S_I) ⊄ cut(S_R) without |S'| < |cut(S_R)|: {other_bad}/{other_cases}; \
             mismatches against the containment form (|S'| = |cut(S_R)| iff cut(S_R) ⊆ cut(S_I)): {corrected_bad} \
             [the two stated implications have their subset direction reversed and cannot hold in general]"
        ),
    }
}

fn lattice() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..10_000 {
        let size = rng.random_range(1..=30);
        let (a, b) = random_pair(&mut rng, size);
        let w = rng.random::<f64>();
        let lo = combine_min(&a, &b).unwrap();
        let hi = combine_max(&a, &b).unwrap();
        let mid = combine_convex(&a, &b, &Weight::Constant(w)).unwrap();
        for (e, m) in mid.iter() {
            if lo.membership(e) > m || m > hi.membership(e) {
                violations += 1;
            }
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("10000 pairs, {violations} pointwise violations of min <= convex <= max"),
    }
}

fn reciprocal_rank() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // 50 entities and 2 relations give 100 distinct (head, relation) queries
    let text: String = (0..50)
        .flat_map(|i| (0..2).map(move |r| format!("e{i}\tr{r}\te{}\n", (i + 1) % 50)))
        .collect();
    let g = graph(&text);
    let mut rank_mismatch = 0;
    let mut worst_mrr_gap: f64 = 0.0;
    for _batch in 0..100 {
        let mut dump = String::new();
        let mut queries = Vec::new();
        for q in 0..100u32 {
            let head = EntityId(q % 50);
            let relation = g.relation(&format!("r{}", q / 50)).unwrap();
            let size = rng.random_range(5..=50);
            let candidates: Vec<EntityId> = sample(&mut rng, 50, size)
                .into_iter()
                .map(|i| EntityId(i as u32))
                .collect();
            for &c in &candidates {
                dump.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    g.entity_name(head),
                    g.relation_name(relation),
                    g.entity_name(c),
                    membership(&mut rng)
                ));
            }
            queries.push(EvalQuery {
                triple: Triple::new(head, relation, candidates[0]),
                candidates,
                seed: 0,
            });
        }
        let scorer = ExternalScores::from_reader(dump.as_bytes(), "dump", 0.0).unwrap();
        let mut inverse_cuts = 0.0;
        for q in &queries {
            let set = score_candidates(&scorer, &g, q.query(), &q.candidates).unwrap();
            let cut = answer_cut(&set, q.answer()).unwrap().len();
            if rank_of_answer(&set, q.answer()).unwrap() != cut {
                rank_mismatch += 1;
            }
            inverse_cuts += 1.0 / cut as f64;
        }
        let report = evaluate(&SingleScorer(Arc::new(scorer)), &g, &queries, "rr", 1).unwrap();
        worst_mrr_gap = worst_mrr_gap.max((report.mrr - inverse_cuts / queries.len() as f64).abs());
    }
    Outcome {
        pass: rank_mismatch == 0 && worst_mrr_gap <= 1e-12,
        detail: format!("10000 fixtures, {rank_mismatch} rank/cut mismatches, max MRR gap {worst_mrr_gap:.3e}"),
    }
}

/// Rule confidences and triple scores computed straight from the fact list:
/// every sequence of distinct entities is tried, and every relation choice
/// between consecutive entities.
struct BruteForce {
    confidence: BTreeMap<(RelationId, Vec<RelationId>), f64>,
    pairs: BTreeMap<Vec<RelationId>, BTreeSet<(EntityId, EntityId)>>,
    default_score: f64,
}

impl BruteForce {
    fn new(facts: &[Triple], entities: u32, hops: usize, min_support: usize, default_score: f64) -> Self {
        let links = |a: EntityId, b: EntityId| -> Vec<RelationId> {
            let mut out = Vec::new();
            for f in facts {
                if f.head == a && f.tail == b {
                    out.push(f.relation);
                }
                if f.tail == a && f.head == b {
                    out.push(f.relation.inverse());
                }
            }
            out
        };
        let mut pairs: BTreeMap<Vec<RelationId>, BTreeSet<(EntityId, EntityId)>> = BTreeMap::new();
        fn walk(
            seq: &mut Vec<EntityId>,
            entities: u32,
            hops: usize,
            links: &dyn Fn(EntityId, EntityId) -> Vec<RelationId>,
            pairs: &mut BTreeMap<Vec<RelationId>, BTreeSet<(EntityId, EntityId)>>,
        ) {
            if seq.len() >= 2 {
                let mut bodies: Vec<Vec<RelationId>> = vec![Vec::new()];
                for w in seq.windows(2) {
                    let options = links(w[0], w[1]);
                    bodies = bodies
                        .iter()
                        .flat_map(|b| {
                            options.iter().map(move |&r| {
                                let mut nb = b.clone();
                                nb.push(r);
                                nb
                            })
                        })
                        .collect();
                }
                for b in bodies {
                    pairs.entry(b).or_default().insert((seq[0], *seq.last().unwrap()));
                }
            }
            if seq.len() > hops {
                return;
            }
            for e in (0..entities).map(EntityId) {
                if !seq.contains(&e) {
                    seq.push(e);
                    walk(seq, entities, hops, links, pairs);
                    seq.pop();
                }
            }
        }
        walk(&mut Vec::new(), entities, hops, &links, &mut pairs);

        let heads: BTreeSet<RelationId> = facts.iter().map(|f| f.relation).collect();
        let mut confidence = BTreeMap::new();
        for (body, joined) in &pairs {
            for &r in &heads {
                if body.as_slice() == [r] {
                    continue;
                }
                let support = joined
                    .iter()
                    .filter(|&&(x, y)| facts.contains(&Triple::new(x, r, y)))
                    .count();
                if support >= min_support {
                    confidence.insert((r, body.clone()), support as f64 / joined.len() as f64);
                }
            }
        }
        BruteForce {
            confidence,
            pairs,
            default_score,
        }
    }

    fn score(&self, h: EntityId, r: RelationId, t: EntityId) -> f64 {
        self.pairs
            .iter()
            .filter(|(body, joined)| body.as_slice() != [r] && joined.contains(&(h, t)))
            .filter_map(|(body, _)| self.confidence.get(&(r, body.clone())).copied())
            .fold(None, |acc: Option<f64>, c| Some(acc.map_or(c, |a| a.max(c))))
            .unwrap_or(self.default_score)
    }
}

fn scorer_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut mismatches, mut nonzero) = (0usize, 0usize, 0usize);
    for _ in 0..200 {
        let entities = rng.random_range(3..=12u32);
        let relations = rng.random_range(1..=3u32);
        let facts = rng.random_range(2..=(2 * entities));
        let text: String = (0..facts)
            .map(|_| {
                format!(
                    "v{}\tp{}\tv{}\n",
                    rng.random_range(0..entities),
                    rng.random_range(0..relations),
                    rng.random_range(0..entities)
                )
            })
            .collect();
        let g = graph(&text);
        let config = MiningConfig {
            max_hops: rng.random_range(1..=3),
            min_support: rng.random_range(1..=2),
            max_paths: usize::MAX,
            default_score: if rng.random_bool(0.5) { 0.0 } else { 0.25 },
            workers: 1,
        };
        let rules = mine_rules(&g, &config).unwrap();
        let oracle = BruteForce::new(
            g.triples(),
            g.entity_count() as u32,
            config.max_hops,
            config.min_support,
            config.default_score,
        );
        for rule in rules.iter() {
            if oracle.confidence.get(&(rule.head, rule.body.0.clone())) != Some(&rule.confidence) {
                mismatches += 1;
            }
        }
        if rules.len() != oracle.confidence.len() {
            mismatches += 1;
        }
        for h in g.entity_ids() {
            for t in g.entity_ids() {
                for base in 0..g.relation_count() as u32 {
                    let forward = RelationId::forward(base);
                    for r in [forward, forward.inverse()] {
                        let got = rules.score_triple(&g, h, r, t).unwrap();
                        let want = oracle.score(h, r, t);
                        checked += 1;
                        if got != want {
                            mismatches += 1;
                        }
                        if got > config.default_score {
                            nonzero += 1;
                        }
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: mismatches == 0 && secs < 30.0 && nonzero > 0,
        detail: format!(
            "200 graphs, {checked} triples scored ({nonzero} above default), {mismatches} mismatches, {secs:.2}s"
        ),
    }
}

fn president_rule() -> Outcome {
    let g = graph("x\tpresident_of\ty\nz\tcapital_of\ty\nx\twork_at\tz\n");
    let rules = mine_rules(
        &g,
        &MiningConfig {
            min_support: 1,
            ..MiningConfig::with_hops(2)
        },
    )
    .unwrap();
    let body = RelationPath(vec![
        g.relation("president_of").unwrap(),
        g.relation("capital_of^-1").unwrap(),
    ]);
    let work_at = g.relation("work_at").unwrap();
    let conf = rules.confidence(&body, work_at);
    let score = rules
        .score_triple(&g, g.entity("x").unwrap(), work_at, g.entity("z").unwrap())
        .unwrap();
    Outcome {
        pass: conf == Some(1.0) && score == 1.0,
        detail: format!("[president_of, capital_of^-1] -> work_at confidence {conf:?}, score {score}"),
    }
}

struct Synthetic {
    split: InductiveSplit,
    scorers: Vec<Arc<dyn Scorer>>,
}

fn synthetic() -> Synthetic {
    let data = generate(&SynthConfig::default()).unwrap();
    let split = validate_split(
        &build_graph(SynthDataset::to_file(&data.train)),
        &build_graph(SynthDataset::to_file(&data.inference)),
        &SynthDataset::to_file(&data.test),
    )
    .unwrap();
    let scorers = (1..=3)
        .map(|h| {
            let config = MiningConfig {
                workers: 4,
                ..MiningConfig::with_hops(h)
            };
            Arc::new(mine_rules(&split.train_graph, &config).unwrap()) as Arc<dyn Scorer>
        })
        .collect();
    Synthetic { split, scorers }
}

fn ideal_dominance(data: &Synthetic) -> Outcome {
    let g = &data.split.inference_graph;
    let queries = build_queries(g, &data.split.test_triples, 49, 42, NegativeFilter::Graph).unwrap();
    let two = SingleScorer(data.scorers[1].clone());
    let three = SingleScorer(data.scorers[2].clone());
    let mrr2 = evaluate(&two, g, &queries, "2-hop", 4).unwrap().mrr;
    let mrr3 = evaluate(&three, g, &queries, "3-hop", 4).unwrap().mrr;
    let pipeline = RerankPipeline::new(
        data.scorers[1].clone(),
        data.scorers[2].clone(),
        CutoffStrategy::IdealOracle,
        CombineStrategy::ReplaceScores,
    )
    .unwrap();
    let (mut retained, mut dominated) = (0, 0);
    for q in &queries {
        let outcome = pipeline
            .rerank_query(g, q.query(), &q.candidates, Some(q.answer()))
            .unwrap();
        if !outcome.pool.contains(q.answer()) {
            continue;
        }
        retained += 1;
        let fused = outcome.ranking.rank_of(q.answer()).unwrap();
        let alone = three
            .rank(g, q.query(), &q.candidates, None)
            .unwrap()
            .rank_of(q.answer())
            .unwrap();
        if 1.0 / fused as f64 >= 1.0 / alone as f64 {
            dominated += 1;
        }
    }
    Outcome {
        pass: mrr3 > mrr2 && retained == queries.len() && dominated == retained,
        detail: format!(
            "MRR 2-hop {mrr2:.3} < 3-hop {mrr3:.3}; ideal+replace RR >= re-ranker RR on {dominated}/{retained} retained queries"
        ),
    }
}

fn hop_orderings(data: &Synthetic) -> Outcome {
    let g = &data.split.inference_graph;
    let queries: Vec<(Query, Vec<EntityId>)> = data
        .split
        .test_triples
        .iter()
        .map(|t| (Query::new(t.head, t.relation), all_entity_candidates(g, t.head)))
        .collect();
    let runs: Vec<ScoredRun> = data
        .scorers
        .iter()
        .enumerate()
        .map(|(i, s)| score_run(&format!("{}-hop", i + 1), s, g, &queries, 4).unwrap())
        .collect();
    let overlap: Vec<f64> = intersection_table(&runs, &[10])
        .unwrap()
        .iter()
        .map(|r| r.mean)
        .collect();
    let reach: Vec<f64> = reachability_table(g, &runs, 10, &[2])
        .unwrap()
        .iter()
        .map(|r| r.mean)
        .collect();
    // pairs come out as (1,2), (1,3), (2,3)
    let overlap_ok = overlap[0] > overlap[2] && overlap[2] > overlap[1];
    let reach_ok = reach[0] <= reach[1] && reach[1] <= reach[2];
    Outcome {
        pass: overlap_ok && reach_ok,
        detail: format!(
            "top-10 overlap (1,2) {:.3} (1,3) {:.3} (2,3) {:.3}; 2-hop reachability by scorer {:.3} {:.3} {:.3}",
            overlap[0], overlap[1], overlap[2], reach[0], reach[1], reach[2]
        ),
    }
}

/// Ten queries, five candidates each (a..e in id order). Retriever and
/// re-ranker scores, pool of the retriever's top 3, equal-weight mean.
const EXTERNAL_FIXTURE: [([f64; 5], [f64; 3], usize); 10] = [
    // retriever a..e, re-ranker on the pool in pool order, expected rank
    ([0.9, 0.8, 0.7, 0.2, 0.1], [0.9, 0.1, 0.1], 1),
    ([0.5, 0.9, 0.8, 0.7, 0.1], [0.2, 0.2, 0.2], 4),
    ([0.6, 0.9, 0.8, 0.1, 0.1], [0.2, 0.3, 0.9], 1),
    ([0.7, 0.9, 0.8, 0.0, 0.0], [0.5, 0.6, 0.1], 3),
    ([0.8, 0.8, 0.8, 0.8, 0.8], [0.2, 0.4, 0.0], 2),
    ([0.6, 0.8, 0.4, 0.1, 0.1], [0.2, 0.4, 0.8], 3),
    ([0.1, 0.9, 0.8, 0.7, 0.6], [0.9, 0.9, 0.9], 5),
    ([0.9, 0.85, 0.8, 0.1, 0.0], [0.5, 0.6, 0.5], 2),
    ([0.3, 0.3, 0.3, 0.3, 0.9], [0.0, 0.5, 0.9], 3),
    ([0.95, 0.1, 0.2, 0.3, 0.4], [0.0, 1.0, 1.0], 3),
];

fn external_channel() -> Outcome {
    let mut triples = String::new();
    for i in 0..EXTERNAL_FIXTURE.len() {
        triples.push_str(&format!("h{i}\tr\tq{i}a\nq{i}b\ts\tq{i}c\nq{i}d\ts\tq{i}e\n"));
    }
    let g = graph(&triples);
    let mut retriever = String::new();
    let mut reranker = String::new();
    let mut queries = Vec::new();
    for (i, (si, sr, _)) in EXTERNAL_FIXTURE.iter().enumerate() {
        let names: Vec<String> = "abcde".chars().map(|c| format!("q{i}{c}")).collect();
        for (name, s) in names.iter().zip(si) {
            retriever.push_str(&format!("h{i}\tr\t{name}\t{s}\n"));
        }
        // pool = top 3 by retriever score, ties to the earlier candidate
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|&x, &y| si[y].total_cmp(&si[x]).then(x.cmp(&y)));
        for (&slot, s) in order[..3].iter().zip(sr) {
            reranker.push_str(&format!("h{i}\tr\t{}\t{s}\n", names[slot]));
        }
        let candidates: Vec<EntityId> = names.iter().map(|n| g.entity(n).unwrap()).collect();
        queries.push(EvalQuery {
            triple: Triple::new(
                g.entity(&format!("h{i}")).unwrap(),
                g.relation("r").unwrap(),
                candidates[0],
            ),
            candidates,
            seed: 0,
        });
    }
    let pipeline = RerankPipeline::new(
        Arc::new(ExternalScores::from_reader(retriever.as_bytes(), "retriever", 0.0).unwrap()),
        Arc::new(ExternalScores::from_reader(reranker.as_bytes(), "reranker", 0.0).unwrap()),
        CutoffStrategy::TopK { k: 3 },
        CombineStrategy::Mean { weight: 0.5 },
    )
    .unwrap();
    let report = evaluate(&pipeline, &g, &queries, "mean", 1).unwrap();
    let expected: Vec<usize> = EXTERNAL_FIXTURE.iter().map(|f| f.2).collect();
    let got = report.ranks();
    Outcome {
        pass: got == expected,
        detail: format!("ranks {got:?}, hand-traced {expected:?}"),
    }
}

pub fn checks() -> Vec<(u32, &'static str, Outcome)> {
    let data = synthetic();
    vec![
        (1, "re-ranking bounds", bound_suite()),
        (2, "fuzzy lattice", lattice()),
        (3, "rank equals answer-cut size", reciprocal_rank()),
        (4, "rule scorer matches brute force", scorer_oracle()),
        (5, "president/capital rule", president_rule()),
        (6, "ideal cutoff dominance", ideal_dominance(&data)),
        (7, "hop-count orderings", hop_orderings(&data)),
        (10, "external score channel", external_channel()),
    ]
}
