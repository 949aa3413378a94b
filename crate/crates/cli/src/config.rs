//! Run configuration: a TOML file plus command-line overrides.
//!
//! Relative paths in the file are resolved against the directory holding
//! it; an `--out` flag is taken relative to the working directory. The
//! config hash covers every setting except `workers` and `output`, neither
//! of which may change any result.

use std::fs;
use std::path::{Path, PathBuf};

use rerank_kg::eval::NegativeFilter;
use rerank_kg::{CombineStrategy, CutoffStrategy};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// The only generator the negative sampler uses.
pub const PRNG: &str = "chacha8 (rand_chacha, seed_from_u64)";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_dataset")]
    pub dataset: String,
    pub train: PathBuf,
    #[serde(default)]
    pub inference: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
    #[serde(default)]
    pub dev: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers", skip_serializing)]
    pub workers: usize,
    #[serde(default = "default_negatives")]
    pub n_negatives: usize,
    #[serde(default)]
    pub negative_filter: NegativeFilter,
    #[serde(default = "default_output", skip_serializing)]
    pub output: PathBuf,
    #[serde(default = "default_retriever")]
    pub retriever: ScorerSpec,
    #[serde(default = "default_reranker")]
    pub reranker: ScorerSpec,
    #[serde(default)]
    pub mining: MiningSection,
    #[serde(default)]
    pub cutoff: CutoffSection,
    #[serde(default)]
    pub combine: CombineSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

fn default_dataset() -> String {
    "dataset".into()
}
fn default_seed() -> u64 {
    42
}
fn default_workers() -> usize {
    1
}
fn default_negatives() -> usize {
    49
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_retriever() -> ScorerSpec {
    ScorerSpec::Native { hops: 2 }
}
fn default_reranker() -> ScorerSpec {
    ScorerSpec::Native { hops: 3 }
}

/// A native rule scorer of the given path length, or a score dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ScorerSpec {
    Native {
        hops: usize,
    },
    External {
        scores: PathBuf,
        #[serde(default)]
        default_score: f64,
    },
}

impl ScorerSpec {
    pub fn label(&self) -> String {
        match self {
            ScorerSpec::Native { hops } => format!("{hops}-hop"),
            ScorerSpec::External { scores, .. } => format!(
                "external:{}",
                scores
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningSection {
    pub min_support: usize,
    pub max_paths: usize,
    pub default_score: f64,
}

impl Default for MiningSection {
    fn default() -> Self {
        MiningSection {
            min_support: 2,
            max_paths: 100,
            default_score: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CutoffKind {
    Threshold,
    Topk,
    Kmeans,
    Ideal,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSection {
    pub kind: CutoffKind,
    /// Fixed threshold; fitted on the dev file when absent.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "default_top_k")]
    pub k: usize,
    #[serde(default = "default_clusters")]
    pub clusters: usize,
    #[serde(default = "default_keep")]
    pub keep: usize,
}

fn default_top_k() -> usize {
    40
}
fn default_clusters() -> usize {
    5
}
fn default_keep() -> usize {
    3
}

impl Default for CutoffSection {
    fn default() -> Self {
        CutoffSection {
            kind: CutoffKind::Topk,
            theta: None,
            k: default_top_k(),
            clusters: default_clusters(),
            keep: default_keep(),
        }
    }
}

impl CutoffSection {
    /// The strategy, with `fitted` standing in for a missing threshold.
    pub fn strategy(&self, fitted: f64) -> CutoffStrategy {
        match self.kind {
            CutoffKind::Threshold => CutoffStrategy::FixedThreshold {
                theta: self.theta.unwrap_or(fitted),
            },
            CutoffKind::Topk => CutoffStrategy::TopK { k: self.k },
            CutoffKind::Kmeans => CutoffStrategy::KMeans {
                k: self.clusters,
                m: self.keep,
            },
            CutoffKind::Ideal => CutoffStrategy::IdealOracle,
            CutoffKind::None => CutoffStrategy::NoCutoff,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CombineKind {
    Replace,
    Min,
    Max,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombineSection {
    pub kind: CombineKind,
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_weight() -> f64 {
    0.5
}

impl Default for CombineSection {
    fn default() -> Self {
        CombineSection {
            kind: CombineKind::Mean,
            weight: default_weight(),
        }
    }
}

impl CombineSection {
    pub fn strategy(&self) -> CombineStrategy {
        match self.kind {
            CombineKind::Replace => CombineStrategy::ReplaceScores,
            CombineKind::Min => CombineStrategy::Intersection,
            CombineKind::Max => CombineStrategy::Union,
            CombineKind::Mean => CombineStrategy::Mean { weight: self.weight },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub top_n: Vec<usize>,
    pub reach_top_n: usize,
    pub reach_k: Vec<usize>,
    pub difference_n: usize,
    /// Queries exported as DOT graphs.
    pub dot_queries: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            top_n: vec![10, 100, 1000],
            reach_top_n: 10,
            reach_k: vec![2, 3, 5],
            difference_n: 10,
            dot_queries: 3,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub cutoff: Option<CutoffKind>,
    pub combine: Option<CombineKind>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve(base);
        config.apply(overrides);
        config.validate()?;
        config.check_files()?;
        Ok(config)
    }

    /// Every file the config names must exist before any work starts.
    fn check_files(&self) -> Result<(), CliError> {
        let mut files = vec![&self.train];
        files.extend([&self.inference, &self.test, &self.dev].into_iter().flatten());
        for spec in [&self.retriever, &self.reranker] {
            if let ScorerSpec::External { scores, .. } = spec {
                files.push(scores);
            }
        }
        match files.into_iter().find(|p| !p.is_file()) {
            Some(missing) => Err(CliError::io(missing, std::io::ErrorKind::NotFound.into())),
            None => Ok(()),
        }
    }

    fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(workers) = o.workers {
            self.workers = workers;
        }
        if let Some(kind) = o.cutoff {
            self.cutoff.kind = kind;
        }
        if let Some(kind) = o.combine {
            self.combine.kind = kind;
        }
        if let Some(out) = &o.out {
            self.output = out.clone();
        }
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.train);
        join(&mut self.output);
        for p in [&mut self.inference, &mut self.test, &mut self.dev]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        for spec in [&mut self.retriever, &mut self.reranker] {
            if let ScorerSpec::External { scores, .. } = spec {
                join(scores);
            }
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_negatives == 0 {
            return bad("n_negatives must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        for spec in [&self.retriever, &self.reranker] {
            match spec {
                ScorerSpec::Native { hops } if !(1..=3).contains(hops) => {
                    return bad(format!("hops must be 1, 2 or 3, got {hops}"))
                }
                ScorerSpec::External { default_score, .. } if !(0.0..=1.0).contains(default_score) => {
                    return bad(format!("default_score {default_score} outside [0, 1]"))
                }
                _ => {}
            }
        }
        if self.mining.min_support == 0 || self.mining.max_paths == 0 {
            return bad("min_support and max_paths must be at least 1".into());
        }
        if self.analysis.top_n.contains(&0) || self.analysis.reach_k.contains(&0) || self.analysis.difference_n == 0 {
            return bad("analysis sizes must be positive".into());
        }
        if self.analysis.reach_top_n < 2 {
            return bad("reach_top_n must be at least 2".into());
        }
        self.cutoff.strategy(0.5).validate()?;
        if !(0.0..=1.0).contains(&self.combine.weight) {
            return bad(format!("combine weight {} outside [0, 1]", self.combine.weight));
        }
        Ok(())
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, CliError> {
        path.as_deref()
            .ok_or_else(|| CliError::Config(format!("config needs a `{key}` file for this command")))
    }

    /// Hex SHA-256 of the settings as written to reports. Paths are reduced
    /// to file names so the hash does not depend on where a run lives.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        let strip = |p: &mut PathBuf| {
            if let Some(name) = p.file_name() {
                *p = PathBuf::from(name);
            }
        };
        strip(&mut canonical.train);
        for p in [&mut canonical.inference, &mut canonical.test, &mut canonical.dev]
            .into_iter()
            .flatten()
        {
            strip(p);
        }
        for spec in [&mut canonical.retriever, &mut canonical.reranker] {
            if let ScorerSpec::External { scores, .. } = spec {
                strip(scores);
            }
        }
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
