use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rerank_kg::analysis::{
    all_entity_candidates, export_prediction_subgraph, intersection_table, reachability_table, sample_indices,
    score_run, set_difference_table, ScoredRun,
};
use rerank_kg::eval::{build_queries, evaluate, fit_threshold, threshold_grid, EvalQuery, EvalReport};
use rerank_kg::kg::{build_graph, load_triples, validate_split, GraphSummary};
use rerank_kg::rerank::SingleScorer;
use rerank_kg::rules::{load_external_scores, mine_rules, score_candidates};
use rerank_kg::synth::{generate, SynthConfig};
use rerank_kg::{
    CombineStrategy, CutoffStrategy, EntityId, InductiveSplit, KnowledgeGraph, MiningConfig, Query, RerankPipeline,
    Scorer, Triple,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, ScorerSpec, PRNG};
use crate::error::CliError;
use crate::tables::{
    difference_ref, ideal_refs, intersection_ref, reachability_ref, strategy_refs, write_csv, DifferenceCsv,
    IntersectionCsv, ReachabilityCsv, StrategyCsv, REF_STATUS,
};

/// Threshold used when neither the config nor a dev file provides one.
const FALLBACK_THETA: f64 = 0.5;
const DOT_TOP_N: usize = 10;
const DOT_HOPS: usize = 3;

fn out_dir(config: &RunConfig, sub: &str) -> Result<PathBuf, CliError> {
    let dir = config.output.join(sub);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn load_train(config: &RunConfig) -> Result<KnowledgeGraph, CliError> {
    Ok(build_graph(load_triples(&config.train)?))
}

fn load_split(config: &RunConfig) -> Result<InductiveSplit, CliError> {
    let inference = load_triples(config.require(&config.inference, "inference")?)?;
    let test = load_triples(config.require(&config.test, "test")?)?;
    Ok(validate_split(&load_train(config)?, &build_graph(inference), &test)?)
}

fn mining_config(config: &RunConfig, hops: usize) -> MiningConfig {
    MiningConfig {
        max_hops: hops,
        min_support: config.mining.min_support,
        max_paths: config.mining.max_paths,
        default_score: config.mining.default_score,
        workers: config.workers,
    }
}

fn native(config: &RunConfig, train: &KnowledgeGraph, hops: usize) -> Result<Arc<dyn Scorer>, CliError> {
    Ok(Arc::new(mine_rules(train, &mining_config(config, hops))?))
}

fn build_scorer(config: &RunConfig, train: &KnowledgeGraph, spec: &ScorerSpec) -> Result<Arc<dyn Scorer>, CliError> {
    match spec {
        ScorerSpec::Native { hops } => native(config, train, *hops),
        ScorerSpec::External { scores, default_score } => Ok(Arc::new(load_external_scores(scores, *default_score)?)),
    }
}

fn test_queries(config: &RunConfig, split: &InductiveSplit) -> Result<Vec<EvalQuery>, CliError> {
    Ok(build_queries(
        &split.inference_graph,
        &split.test_triples,
        config.n_negatives,
        config.seed,
        config.negative_filter,
    )?)
}

#[derive(Debug, Serialize)]
struct Threshold {
    theta: f64,
    source: &'static str,
}

/// Fixed threshold from the config, else fitted on the dev file against the
/// training graph, else the fallback.
fn threshold(
    config: &RunConfig,
    train: &KnowledgeGraph,
    retriever: &Arc<dyn Scorer>,
    reranker: &Arc<dyn Scorer>,
) -> Result<Threshold, CliError> {
    if let Some(theta) = config.cutoff.theta {
        return Ok(Threshold {
            theta,
            source: "config",
        });
    }
    let Some(dev_path) = &config.dev else {
        return Ok(Threshold {
            theta: FALLBACK_THETA,
            source: "fallback",
        });
    };
    let dev = train.resolve(&load_triples(dev_path)?)?;
    let queries = build_queries(train, &dev, config.n_negatives, config.seed, config.negative_filter)?;
    let theta = fit_threshold(
        retriever.clone(),
        reranker.clone(),
        train,
        &queries,
        &threshold_grid(),
        config.workers,
    )?;
    Ok(Threshold { theta, source: "dev" })
}

#[derive(Debug, Serialize)]
struct IngestSummary<'a> {
    dataset: &'a str,
    config_hash: String,
    train: GraphSummary,
    inference: GraphSummary,
    test_triples: usize,
    dev_triples: Option<usize>,
}

pub fn ingest(config: &RunConfig) -> Result<String, CliError> {
    let mut log = Vec::new();
    let split = load_split(config)?;
    let dev_triples = match &config.dev {
        Some(path) => Some(split.train_graph.resolve(&load_triples(path)?)?.len()),
        None => None,
    };
    let summary = IngestSummary {
        dataset: &config.dataset,
        config_hash: config.hash(),
        train: split.train_graph.summary(),
        inference: split.inference_graph.summary(),
        test_triples: split.test_triples.len(),
        dev_triples,
    };
    let path = out_dir(config, "reports")?.join("graph_summary.json");
    write_json(&path, &summary)?;
    log.push(format!(
        "train: {} entities, {} triples; inference: {} entities, {} triples; {} test triples -> {}",
        summary.train.entities,
        summary.train.triples,
        summary.inference.entities,
        summary.inference.triples,
        summary.test_triples,
        path.display()
    ));
    Ok(log.join("\n"))
}

pub fn mine(config: &RunConfig, hops: Option<usize>) -> Result<String, CliError> {
    let mut log = Vec::new();
    let train = load_train(config)?;
    if train.triple_count() == 0 {
        eprintln!("warning: training graph {} is empty", config.train.display());
    }
    let dir = out_dir(config, "rules")?;
    let levels = match hops {
        Some(h) => vec![h],
        None => vec![1, 2, 3],
    };
    for h in levels {
        let rules = mine_rules(&train, &mining_config(config, h))?;
        let path = dir.join(format!("rules_{h}hop.tsv"));
        let mut out = create(&path)?;
        rules.write(&train, &mut out).map_err(|e| CliError::io(&path, e))?;
        out.flush().map_err(|e| CliError::io(&path, e))?;
        if rules.is_empty() {
            eprintln!(
                "warning: no rule reached min_support {} at {h} hops",
                config.mining.min_support
            );
        }
        log.push(format!("{} rules ({h}-hop) -> {}", rules.len(), path.display()));
    }
    Ok(log.join("\n"))
}

pub fn score(config: &RunConfig, hops: Option<usize>) -> Result<String, CliError> {
    let mut log = Vec::new();
    let split = load_split(config)?;
    let specs = match hops {
        Some(h) => vec![ScorerSpec::Native { hops: h }],
        None => vec![config.retriever.clone(), config.reranker.clone()],
    };
    let queries = test_queries(config, &split)?;
    let dir = out_dir(config, "scores")?;
    let g = &split.inference_graph;
    for spec in specs {
        let scorer = build_scorer(config, &split.train_graph, &spec)?;
        let path = dir.join(format!("{}.tsv", spec.label().replace(':', "_")));
        let sets = queries
            .iter()
            .map(|q| score_candidates(scorer.as_ref(), g, q.query(), &q.candidates))
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = create(&path)?;
        for set in &sets {
            set.write_records(g, &mut out).map_err(|e| CliError::io(&path, e))?;
        }
        out.flush().map_err(|e| CliError::io(&path, e))?;
        log.push(format!(
            "{} queries scored by {} -> {}",
            sets.len(),
            spec.label(),
            path.display()
        ));
    }
    Ok(log.join("\n"))
}

pub fn rerank(config: &RunConfig) -> Result<String, CliError> {
    let mut log = Vec::new();
    let split = load_split(config)?;
    let retriever = build_scorer(config, &split.train_graph, &config.retriever)?;
    let reranker = build_scorer(config, &split.train_graph, &config.reranker)?;
    let theta = threshold(config, &split.train_graph, &retriever, &reranker)?;
    let pipeline = RerankPipeline::new(
        retriever,
        reranker,
        config.cutoff.strategy(theta.theta),
        config.combine.strategy(),
    )?;
    let queries = test_queries(config, &split)?;
    let g = &split.inference_graph;
    let path = out_dir(config, "scores")?.join("reranked.tsv");
    let mut out = create(&path)?;
    let mut pooled = 0;
    for q in &queries {
        let outcome = pipeline.rerank_query(g, q.query(), &q.candidates, Some(q.answer()))?;
        pooled += outcome.pool.len();
        for (i, entry) in outcome.ranking.entries().iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.6}",
                g.entity_name(q.triple.head),
                g.relation_name(q.triple.relation),
                g.entity_name(entry.entity),
                i + 1,
                entry.tier,
                entry.score
            )
            .map_err(|e| CliError::io(&path, e))?;
        }
    }
    out.flush().map_err(|e| CliError::io(&path, e))?;
    log.push(format!(
        "{} queries re-ranked with cutoff {} and combine {} (mean pool {:.1}) -> {}",
        queries.len(),
        pipeline.cutoff,
        pipeline.combine,
        pooled as f64 / queries.len().max(1) as f64,
        path.display()
    ));
    Ok(log.join("\n"))
}

#[derive(Debug, Serialize)]
struct StrategyReport {
    method: String,
    setting: String,
    retriever: String,
    reranker: Option<String>,
    cutoff: Option<String>,
    combine: Option<String>,
    report: EvalReport,
}

struct Row {
    method: String,
    retriever: String,
    reranker: Option<String>,
    cutoff: Option<CutoffStrategy>,
    combine: Option<CombineStrategy>,
}

impl Row {
    fn single(label: &str) -> Self {
        Row {
            method: label.to_owned(),
            retriever: label.to_owned(),
            reranker: None,
            cutoff: None,
            combine: None,
        }
    }

    fn pipeline(
        method: &str,
        retriever: &str,
        reranker: &str,
        cutoff: CutoffStrategy,
        combine: CombineStrategy,
    ) -> Self {
        Row {
            method: method.to_owned(),
            retriever: retriever.to_owned(),
            reranker: Some(reranker.to_owned()),
            cutoff: Some(cutoff),
            combine: Some(combine),
        }
    }

    fn setting(&self) -> String {
        match (&self.reranker, self.cutoff, self.combine) {
            (Some(r), Some(c), Some(m)) => format!("{} -> {r}; cutoff {c}; combine {m}", self.retriever),
            _ => self.retriever.clone(),
        }
    }
}

fn run_rows(
    config: &RunConfig,
    split: &InductiveSplit,
    queries: &[EvalQuery],
    scorers: &[(String, Arc<dyn Scorer>)],
    rows: Vec<Row>,
) -> Result<Vec<StrategyReport>, CliError> {
    let find = |label: &str| {
        scorers
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, s)| s.clone())
            .expect("row names a built scorer")
    };
    rows.into_iter()
        .map(|row| {
            let report = match (&row.reranker, row.cutoff, row.combine) {
                (Some(r), Some(cutoff), Some(combine)) => {
                    let pipeline = RerankPipeline::new(find(&row.retriever), find(r), cutoff, combine)?;
                    evaluate(&pipeline, &split.inference_graph, queries, &row.method, config.workers)?
                }
                _ => evaluate(
                    &SingleScorer(find(&row.retriever)),
                    &split.inference_graph,
                    queries,
                    &row.method,
                    config.workers,
                )?,
            };
            Ok(StrategyReport {
                setting: row.setting(),
                method: row.method.clone(),
                retriever: row.retriever.clone(),
                reranker: row.reranker.clone(),
                cutoff: row.cutoff.map(|c| c.to_string()),
                combine: row.combine.map(|c| c.to_string()),
                report,
            })
        })
        .collect()
}

pub fn evaluate_cmd(config: &RunConfig) -> Result<String, CliError> {
    let mut log = Vec::new();
    let split = load_split(config)?;
    let train = &split.train_graph;
    let mut scorers: Vec<(String, Arc<dyn Scorer>)> = Vec::new();
    for h in 1..=3 {
        scorers.push((format!("{h}-hop"), native(config, train, h)?));
    }
    let mut slot = |spec: &ScorerSpec| -> Result<(String, Arc<dyn Scorer>), CliError> {
        let label = spec.label();
        if let Some((_, s)) = scorers.iter().find(|(l, _)| *l == label) {
            return Ok((label, s.clone()));
        }
        let s = build_scorer(config, train, spec)?;
        scorers.push((label.clone(), s.clone()));
        Ok((label, s))
    };
    let (ret_label, retriever) = slot(&config.retriever)?;
    let (rer_label, reranker) = slot(&config.reranker)?;
    let theta = threshold(config, train, &retriever, &reranker)?;
    let queries = test_queries(config, &split)?;

    let replace = CombineStrategy::ReplaceScores;
    let mean_weight = match config.combine.strategy() {
        CombineStrategy::Mean { weight } => weight,
        _ => 0.5,
    };
    let strategy_rows = vec![
        Row::single("1-hop"),
        Row::single("2-hop"),
        Row::single("3-hop"),
        Row::pipeline(
            "threshold θ",
            &ret_label,
            &rer_label,
            CutoffStrategy::FixedThreshold { theta: theta.theta },
            replace,
        ),
        Row::pipeline(
            "top-k (k=40)",
            &ret_label,
            &rer_label,
            CutoffStrategy::TopK { k: 40 },
            replace,
        ),
        Row::pipeline(
            "k-means (3 out of 5)",
            &ret_label,
            &rer_label,
            CutoffStrategy::KMeans { k: 5, m: 3 },
            replace,
        ),
        Row::pipeline(
            "Intersection",
            &ret_label,
            &rer_label,
            CutoffStrategy::NoCutoff,
            CombineStrategy::Intersection,
        ),
        Row::pipeline(
            "Union",
            &ret_label,
            &rer_label,
            CutoffStrategy::NoCutoff,
            CombineStrategy::Union,
        ),
        Row::pipeline(
            "Mean",
            &ret_label,
            &rer_label,
            CutoffStrategy::NoCutoff,
            CombineStrategy::Mean { weight: mean_weight },
        ),
        Row::pipeline(
            "configured",
            &ret_label,
            &rer_label,
            config.cutoff.strategy(theta.theta),
            config.combine.strategy(),
        ),
    ];
    let ideal = CutoffStrategy::IdealOracle;
    let ideal_rows = vec![
        Row::pipeline("1 to 2-hop top-k", "1-hop", "2-hop", ideal, replace),
        Row::pipeline("1 to 3-hop top-k", "1-hop", "3-hop", ideal, replace),
        Row::pipeline("2 to 3-hop top-k", "2-hop", "3-hop", ideal, replace),
        Row::pipeline(
            "2 to 3-hop Intersection",
            "2-hop",
            "3-hop",
            ideal,
            CombineStrategy::Intersection,
        ),
        Row::pipeline("2 to 3-hop Union", "2-hop", "3-hop", ideal, CombineStrategy::Union),
        Row::pipeline(
            "2 to 3-hop Mean",
            "2-hop",
            "3-hop",
            ideal,
            CombineStrategy::Mean { weight: mean_weight },
        ),
    ];
    let actual = run_rows(config, &split, &queries, &scorers, strategy_rows)?;
    let ideal = run_rows(config, &split, &queries, &scorers, ideal_rows)?;

    let dir = out_dir(config, "reports")?;
    let csv_rows = |reports: &[StrategyReport], refs: fn(&str) -> _| -> Vec<StrategyCsv> {
        reports
            .iter()
            .map(|r| {
                StrategyCsv::new(
                    &r.method,
                    r.setting.clone(),
                    r.report.hits_at_1,
                    r.report.mrr,
                    refs(&r.method),
                )
            })
            .collect()
    };
    write_csv(&dir.join("strategies.csv"), &csv_rows(&actual, strategy_refs))?;
    write_csv(&dir.join("ideal.csv"), &csv_rows(&ideal, ideal_refs))?;
    let report = json!({
        "metadata": {
            "dataset": config.dataset,
            "seed": config.seed,
            "prng": PRNG,
            "n_negatives": config.n_negatives,
            "negative_filter": config.negative_filter,
            "config_hash": config.hash(),
            "retriever": ret_label,
            "reranker": rer_label,
            "threshold": theta,
            "test_queries": queries.len(),
            "reference_columns": REF_STATUS,
        },
        "strategies": actual,
        "ideal": ideal,
    });
    write_json(&dir.join("evaluation.json"), &report)?;
    for r in &actual {
        log.push(format!(
            "{:<22} Hits@1 {:.3}  MRR {:.3}",
            r.method, r.report.hits_at_1, r.report.mrr
        ));
    }
    log.push(format!("reports -> {}", dir.display()));
    Ok(log.join("\n"))
}

pub fn analyze(config: &RunConfig) -> Result<String, CliError> {
    let mut log = Vec::new();
    let split = load_split(config)?;
    let g = &split.inference_graph;
    let queries: Vec<(Query, Vec<EntityId>)> = split
        .test_triples
        .iter()
        .map(|t: &Triple| (Query::new(t.head, t.relation), all_entity_candidates(g, t.head)))
        .collect();
    let mut runs: Vec<ScoredRun> = Vec::new();
    for h in 1..=3 {
        let scorer = native(config, &split.train_graph, h)?;
        runs.push(score_run(&format!("{h}-hop"), &scorer, g, &queries, config.workers)?);
    }
    let a = &config.analysis;
    let dir = out_dir(config, "analysis")?;

    let overlap: Vec<IntersectionCsv> = intersection_table(&runs, &a.top_n)?
        .into_iter()
        .map(|r| {
            let refs = intersection_ref(r.n, &r.left, &r.right);
            IntersectionCsv {
                n: r.n,
                left: r.left,
                right: r.right,
                measured: r.mean,
                ref_wn18rr: refs[0],
                ref_fb15k237: refs[1],
                ref_nell995: refs[2],
                ref_status: REF_STATUS,
            }
        })
        .collect();
    write_csv(&dir.join("top_n_overlap.csv"), &overlap)?;

    let reversed: Vec<ScoredRun> = runs.iter().rev().cloned().collect();
    let reach: Vec<ReachabilityCsv> = reachability_table(g, &reversed, a.reach_top_n, &a.reach_k)?
        .into_iter()
        .map(|r| {
            let refs = reachability_ref(r.k, &r.scorer);
            ReachabilityCsv {
                k: r.k,
                scorer: r.scorer,
                measured: r.mean,
                ref_wn18rr: refs[0],
                ref_fb15k237: refs[1],
                ref_nell995: refs[2],
                ref_status: REF_STATUS,
            }
        })
        .collect();
    write_csv(&dir.join("reachability.csv"), &reach)?;

    let difference: Vec<DifferenceCsv> = set_difference_table(&runs, &[(0, 1), (0, 2), (1, 2)], a.difference_n)?
        .into_iter()
        .map(|r| {
            let refs = difference_ref(&r.retriever, &r.reranker);
            DifferenceCsv {
                retriever: r.retriever,
                reranker: r.reranker,
                measured: r.mean,
                ref_wn18rr: refs[0],
                ref_fb15k237: refs[1],
                ref_nell995: refs[2],
                ref_status: REF_STATUS,
            }
        })
        .collect();
    write_csv(&dir.join("set_difference.csv"), &difference)?;

    let dot_dir = out_dir(config, "analysis/dot")?;
    let picked = sample_indices(queries.len(), a.dot_queries, config.seed);
    for &i in &picked {
        for run in &runs {
            let sub = export_prediction_subgraph(g, &run.sets[i], DOT_TOP_N, None, DOT_HOPS)?;
            let path = dot_dir.join(format!("query{i:03}_{}.dot", run.name));
            fs::write(&path, sub.to_dot(g)).map_err(|e| CliError::io(&path, e))?;
        }
    }
    log.push(format!(
        "overlap, reachability and set-difference tables and {} DOT graphs for queries {:?} -> {}",
        picked.len() * runs.len(),
        picked,
        dir.display()
    ));
    Ok(log.join("\n"))
}

/// Writes a synthetic benchmark and a matching config file into `dir`.
pub fn synth(dir: &Path, seed: u64) -> Result<String, CliError> {
    let mut log = Vec::new();
    let data = generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    data.write_to(dir)?;
    let config = format!(
        "dataset = \"synthetic\"\ntrain = \"train.tsv\"\ninference = \"inference.tsv\"\ntest = \"test.tsv\"\n\
         dev = \"dev.tsv\"\nseed = {seed}\noutput = \"out\"\n\n[retriever]\nhops = 2\n\n[reranker]\nhops = 3\n"
    );
    let path = dir.join("config.toml");
    fs::write(&path, config).map_err(|e| CliError::io(&path, e))?;
    log.push(format!(
        "{} train, {} inference, {} test, {} dev triples -> {}",
        data.train.len(),
        data.inference.len(),
        data.test.len(),
        data.dev.len(),
        dir.display()
    ));
    Ok(log.join("\n"))
}
