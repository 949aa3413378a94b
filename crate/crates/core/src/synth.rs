//! Seeded generator for small inductive benchmarks.
//!
//! Each graph is a set of communities with sparse background edges. A target
//! relation is planted through three rule shapes of increasing length: a
//! direct alias, a two-step pattern and a three-step chain, the chain being
//! the most reliable. The training and inference graphs share relations but
//! not entities; test facts are held out of the inference graph and dev
//! facts out of the training graph.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kg::TripleFile;

/// Name of the planted target relation.
pub const TARGET_RELATION: &str = "target";

const BACKGROUND: [&str; 4] = ["near", "likes", "knows", "owns"];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub entities: usize,
    pub community_size: usize,
    /// Background edges per entity.
    pub background_degree: usize,
    /// Chance that a background edge leaves its community.
    pub cross_community: f64,
    /// Planted patterns of each shape per community.
    pub patterns_per_community: usize,
    /// Chance that a pattern of length 1, 2, 3 yields a target fact.
    pub reliability: [f64; 3],
    pub test_facts: usize,
    pub dev_facts: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            entities: 200,
            community_size: 30,
            background_degree: 2,
            cross_community: 0.05,
            patterns_per_community: 6,
            reliability: [0.3, 0.4, 0.95],
            test_facts: 40,
            dev_facts: 20,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub train: Vec<[String; 3]>,
    pub inference: Vec<[String; 3]>,
    pub test: Vec<[String; 3]>,
    pub dev: Vec<[String; 3]>,
}

type Fact = (usize, &'static str, usize);

struct Planted {
    facts: Vec<Fact>,
    targets: Vec<Fact>,
}

fn plant(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Planted {
    let n = config.entities;
    let size = config.community_size;
    let community = |e: usize| e / size;
    let members = |c: usize| (c * size..((c + 1) * size).min(n)).collect::<Vec<_>>();
    let communities = n.div_ceil(size);

    let mut facts = BTreeSet::new();
    for e in 0..n {
        for _ in 0..config.background_degree {
            let other = if rng.random_bool(config.cross_community) {
                rng.random_range(0..n)
            } else {
                *members(community(e)).choose(rng).expect("non-empty community")
            };
            if other != e {
                facts.insert((e, *BACKGROUND.choose(rng).expect("relations"), other));
            }
        }
    }

    let mut targets = BTreeSet::new();
    for c in 0..communities {
        let pool = members(c);
        if pool.len() < 4 {
            continue;
        }
        for _ in 0..config.patterns_per_community {
            let mut pick = |k: usize| -> Vec<usize> { pool.choose_multiple(rng, k).copied().collect() };
            let one = pick(2);
            let two = pick(3);
            let three = pick(4);
            let roll = |rng: &mut ChaCha8Rng, i: usize| rng.random_bool(config.reliability[i]);

            facts.insert((one[0], "alias", one[1]));
            facts.insert((two[0], "step_a", two[1]));
            facts.insert((two[1], "step_b", two[2]));
            facts.insert((three[0], "chain_a", three[1]));
            facts.insert((three[1], "chain_b", three[2]));
            facts.insert((three[2], "chain_c", three[3]));
            for (i, (x, y)) in [(one[0], one[1]), (two[0], two[2]), (three[0], three[3])]
                .into_iter()
                .enumerate()
            {
                if roll(rng, i) {
                    targets.insert((x, TARGET_RELATION, y));
                }
            }
        }
    }
    Planted {
        facts: facts.into_iter().collect(),
        targets: targets.into_iter().collect(),
    }
}

fn named(prefix: &str, facts: &[Fact]) -> Vec<[String; 3]> {
    facts
        .iter()
        .map(|&(h, r, t)| [format!("{prefix}{h}"), r.to_owned(), format!("{prefix}{t}")])
        .collect()
}

type Rows = Vec<[String; 3]>;

/// Builds one graph and splits `held_out` target facts off it.
fn graph_with_holdout(
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
    prefix: &str,
    held_out: usize,
) -> Result<(Rows, Rows)> {
    let Planted { facts, mut targets } = plant(config, rng);
    if targets.len() <= held_out {
        return Err(Error::InvalidParameter(format!(
            "only {} target facts planted, cannot hold out {held_out}",
            targets.len()
        )));
    }
    targets.shuffle(rng);
    let held = targets.split_off(targets.len() - held_out);
    let mut graph = named(prefix, &facts);
    graph.extend(named(prefix, &targets));
    graph.shuffle(rng);
    Ok((graph, named(prefix, &held)))
}

pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    if config.community_size < 4 || config.entities < config.community_size {
        return Err(Error::InvalidParameter(
            "need at least one community of four or more entities".into(),
        ));
    }
    if config.reliability.iter().any(|p| !(0.0..=1.0).contains(p)) || !(0.0..=1.0).contains(&config.cross_community) {
        return Err(Error::InvalidParameter("probabilities must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (train, dev) = graph_with_holdout(config, &mut rng, "tr", config.dev_facts)?;
    let (inference, test) = graph_with_holdout(config, &mut rng, "in", config.test_facts)?;
    Ok(SynthDataset {
        train,
        inference,
        test,
        dev,
    })
}

impl SynthDataset {
    pub fn to_file(rows: &[[String; 3]]) -> TripleFile {
        let mut file = TripleFile::default();
        for [h, r, t] in rows {
            file.push(h, r, t);
        }
        file
    }

    /// Writes `train.tsv`, `inference.tsv`, `test.tsv` and `dev.tsv`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, rows) in [
            ("train.tsv", &self.train),
            ("inference.tsv", &self.inference),
            ("test.tsv", &self.test),
            ("dev.tsv", &self.dev),
        ] {
            let text: String = rows.iter().map(|[h, r, t]| format!("{h}\t{r}\t{t}\n")).collect();
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
