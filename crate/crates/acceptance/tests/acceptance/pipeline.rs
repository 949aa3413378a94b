//! Criteria checked through the command-line pipeline: reproducibility
//! across worker counts and the row/column layout of every emitted table.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use rerank_kg_cli::{run, Cli};

use crate::Outcome;

/// Runs one command line in-process; relative paths are taken under `dir`.
fn rerank_kg(dir: &Path, args: &[&str]) -> Result<(), String> {
    let mut argv = vec!["rerank-kg".to_owned()];
    let mut rest = args.iter();
    while let Some(&arg) = rest.next() {
        argv.push(arg.to_owned());
        if matches!(arg, "--config" | "--out") {
            let value = rest.next().ok_or("flag without value")?;
            argv.push(dir.join(value).to_string_lossy().into_owned());
        }
    }
    let cli = Cli::try_parse_from(&argv).map_err(|e| e.to_string())?;
    run(cli).map(drop).map_err(|e| format!("{args:?}: {}", e.record()))
}

fn report_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir.join("reports"))
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

const LIMIT: Duration = Duration::from_secs(120);

fn determinism(root: &Path) -> Result<Outcome, String> {
    let start = Instant::now();
    let config = "data/config.toml";
    rerank_kg(root, &["synth", "--out", "data", "--seed", "42"])?;
    for cmd in ["ingest", "mine", "score", "rerank", "evaluate", "analyze"] {
        rerank_kg(root, &[cmd, "--config", config, "--out", "w1", "--workers", "1"])?;
    }
    let elapsed = start.elapsed();
    rerank_kg(
        root,
        &["evaluate", "--config", config, "--out", "w1b", "--workers", "1"],
    )?;
    rerank_kg(root, &["evaluate", "--config", config, "--out", "w8", "--workers", "8"])?;

    let first = report_files(&root.join("w1"));
    let mut mismatched = Vec::new();
    for other in ["w1b", "w8"] {
        let files = report_files(&root.join(other));
        for (name, a) in first.iter().filter(|(n, _)| n != "graph_summary.json") {
            if files.iter().find(|(n, _)| n == name).map(|(_, b)| b) != Some(a) {
                mismatched.push(format!("{other}/{name}"));
            }
        }
    }
    let compared: Vec<_> = first
        .iter()
        .map(|(n, _)| n.as_str())
        .filter(|n| *n != "graph_summary.json")
        .collect();
    Ok(Outcome {
        pass: mismatched.is_empty() && compared.len() == 3 && elapsed < LIMIT,
        detail: format!(
            "{compared:?} identical across reruns and --workers 8 ({} mismatches); full pipeline {:.1}s",
            mismatched.len(),
            elapsed.as_secs_f64()
        ),
    })
}

fn rows(path: &Path, columns: usize) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let header = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(String::from)
        .collect();
    let body = reader
        .records()
        .map(|r| r.map(|r| r.iter().take(columns).map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    Ok((header, body))
}

const REFS: [&str; 4] = ["ref_wn18rr", "ref_fb15k237", "ref_nell995", "ref_status"];

fn header_with_refs(lead: &[&str]) -> Vec<String> {
    lead.iter().chain(REFS.iter()).map(|s| s.to_string()).collect()
}

fn table_layout(root: &Path) -> Result<Outcome, String> {
    let analysis = root.join("w1/analysis");
    let mut problems = Vec::new();
    let pairs = [("1-hop", "2-hop"), ("1-hop", "3-hop"), ("2-hop", "3-hop")];

    let (header, body) = rows(&analysis.join("top_n_overlap.csv"), 3)?;
    let expected: Vec<Vec<String>> = [10, 100, 1000]
        .iter()
        .flat_map(|n| {
            pairs
                .iter()
                .map(move |(a, b)| vec![n.to_string(), a.to_string(), b.to_string()])
        })
        .collect();
    if header != header_with_refs(&["n", "left", "right", "measured"]) || body != expected {
        problems.push("top-n overlap");
    }

    let (header, body) = rows(&analysis.join("reachability.csv"), 2)?;
    let expected: Vec<Vec<String>> = [2, 3, 5]
        .iter()
        .flat_map(|k| ["3-hop", "2-hop", "1-hop"].map(|s| vec![k.to_string(), s.to_string()]))
        .collect();
    if header != header_with_refs(&["k", "scorer", "measured"]) || body != expected {
        problems.push("reachability");
    }

    let (header, body) = rows(&analysis.join("set_difference.csv"), 2)?;
    let expected: Vec<Vec<String>> = pairs.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]).collect();
    if header != header_with_refs(&["retriever", "reranker", "measured"]) || body != expected {
        problems.push("set difference");
    }

    let (header, body) = rows(&root.join("w1/reports/strategies.csv"), usize::MAX)?;
    let methods: Vec<&str> = body.iter().map(|r| r[0].as_str()).collect();
    let strategy_rows = [
        "threshold θ",
        "top-k (k=40)",
        "k-means (3 out of 5)",
        "Intersection",
        "Union",
        "Mean",
    ];
    let annotated = body
        .iter()
        .filter(|r| strategy_rows.contains(&r[0].as_str()))
        .all(|r| !r[4].is_empty() && r[10].contains("not reproducible"));
    if header.len() != 11 || !strategy_rows.iter().all(|m| methods.contains(m)) || !annotated {
        problems.push("strategies");
    }
    let dots = fs::read_dir(analysis.join("dot")).map_err(|e| e.to_string())?.count();
    Ok(Outcome {
        pass: problems.is_empty() && dots > 0,
        detail: format!(
            "overlap, reachability, set-difference and strategy tables laid out with annotated reference columns; {dots} DOT exports; problems {problems:?}"
        ),
    })
}

pub fn checks() -> Vec<(u32, &'static str, Outcome)> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let root = dir.path();
    let failed = |e: String| Outcome { pass: false, detail: e };
    // The layout check reads the outputs of the determinism run.
    let determinism = determinism(root).unwrap_or_else(failed);
    let layout = table_layout(root).unwrap_or_else(failed);
    vec![(8, "determinism", determinism), (9, "table layout", layout)]
}
