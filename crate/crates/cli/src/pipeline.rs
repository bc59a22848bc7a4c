//! End-to-end runs and their manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use finsenti::analysis;
use finsenti::factor;
use finsenti::ingest;

use crate::config::{require, PipelineConfig};
use crate::stages::{self, BaselineRequest, ScoreWordsInputs};

pub const STAGES: [&str; 8] = [
    "tokenize",
    "train",
    "score-words",
    "score-articles",
    "factor",
    "analyze",
    "baseline",
    "plot",
];

pub const MANIFEST: &str = "manifest.json";

/// A failure attributed to one stage.
#[derive(Debug)]
pub struct StageFailure {
    pub stage: String,
    pub error: anyhow::Error,
}

impl std::fmt::Display for StageFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stage `{}` failed: {:#}", self.stage, self.error)
    }
}

pub fn in_stage<T>(stage: &str, r: Result<T>) -> Result<T, StageFailure> {
    r.map_err(|error| StageFailure {
        stage: stage.to_string(),
        error,
    })
}

/// Stage seed: the first 8 bytes of SHA-256 over the root seed and name.
pub fn derive_seed(root: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"finsenti/seed/");
    h.update(root.to_le_bytes());
    h.update(stage.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub build: String,
    pub root_seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    /// Snapshot with absolute input paths.
    pub config: PipelineConfig,
    /// SHA-256 of every input file, keyed by setting name.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every artifact, keyed by file name in the output directory.
    pub artifacts: BTreeMap<String, String>,
    pub stages: Vec<String>,
}

fn input_digests(cfg: &PipelineConfig) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (name, path) in cfg.paths.named() {
        if name == "graph" {
            for f in ["synsets.tsv", "edges.tsv", "mapping.tsv"] {
                out.insert(format!("graph/{f}"), file_digest(&path.join(f))?);
            }
        } else {
            out.insert(name.to_string(), file_digest(path)?);
        }
    }
    Ok(out)
}

fn absolute(cfg: &PipelineConfig) -> Result<PipelineConfig> {
    let mut cfg = cfg.clone();
    let paths = &mut cfg.paths;
    for p in [
        &mut paths.dictionary,
        &mut paths.hmm,
        &mut paths.stopwords,
        &mut paths.lexicon,
        &mut paths.common_words,
        &mut paths.graph,
        &mut paths.corpus,
        &mut paths.training,
        &mut paths.market,
        &mut paths.temperature,
        &mut paths.labeled,
        &mut paths.embeddings,
    ]
    .into_iter()
    .flatten()
    {
        *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display()))?;
    }
    Ok(cfg)
}

/// Files a stage writes, relative to the output directory.
pub fn stage_outputs(stage: &str, cfg: &PipelineConfig) -> Vec<&'static str> {
    match stage {
        "tokenize" => vec!["tokens.txt"],
        "train" if cfg.paths.embeddings.is_some() => vec![],
        "train" => vec!["model.txt", "train_loss.csv"],
        "score-words" if cfg.paths.labeled.is_some() => vec!["cache.tsv", "word_accuracy.json"],
        "score-words" => vec!["cache.tsv"],
        "score-articles" => vec!["article_scores.csv"],
        "factor" => vec!["factor.csv"],
        "analyze" => vec!["report.csv"],
        "baseline" => vec!["baselines.csv"],
        "plot" => vec!["chart.svg"],
        _ => vec![],
    }
}

struct Run<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    seeds: BTreeMap<String, u64>,
}

impl Run<'_> {
    fn at(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn model_path(&self) -> PathBuf {
        self.cfg.paths.embeddings.clone().unwrap_or_else(|| self.at("model.txt"))
    }

    fn stage(&self, stage: &str) -> Result<String> {
        let p = &self.cfg.paths;
        match stage {
            "tokenize" => {
                let seg = stages::segmenter(require(&p.dictionary, "dictionary")?, p.hmm.as_deref())?;
                let cleaner = stages::scoring_cleaner(p.stopwords.as_deref())?;
                let n = stages::tokenize(require(&p.corpus, "corpus")?, &seg, &cleaner, &self.at("tokens.txt"))?;
                Ok(format!("{n} articles"))
            }
            "train" => {
                if let Some(model) = &p.embeddings {
                    return Ok(format!("skipped, using {}", model.display()));
                }
                let seg = stages::segmenter(require(&p.dictionary, "dictionary")?, p.hmm.as_deref())?;
                let tc = self.cfg.train.to_train_config(self.seeds["train"])?;
                let s = stages::train(
                    require(&p.training, "training")?,
                    &seg,
                    &tc,
                    &self.at("model.txt"),
                    Some(&self.at("train_loss.csv")),
                )?;
                let first = s.losses.first().copied().unwrap_or(f64::NAN);
                let last = s.losses.last().copied().unwrap_or(f64::NAN);
                Ok(format!("{} words, loss {first:.4} -> {last:.4}", s.vocab))
            }
            "score-words" => {
                let model = self.model_path();
                let inputs = ScoreWordsInputs {
                    model: &model,
                    graph: require(&p.graph, "graph")?,
                    lexicon: require(&p.lexicon, "lexicon")?,
                    words: require(&p.common_words, "common_words")?,
                    labeled: p.labeled.as_deref(),
                };
                let sc = &self.cfg.score;
                let s = stages::score_words(&inputs, sc.n, sc.m, sc.threshold, &self.at("cache.tsv"))?;
                let mut msg = format!("{} words scored, {} by fallback, {} without vectors", s.scored, s.fallback, s.omitted);
                if let Some(acc) = &s.accuracy {
                    stages::write(&self.at("word_accuracy.json"), &stages::accuracy_json(acc, sc.threshold))?;
                    if let Some(a) = acc.accuracy {
                        msg.push_str(&format!(", label accuracy {:.4} on {}", a, acc.evaluated));
                    }
                }
                Ok(msg)
            }
            "score-articles" => {
                let seg = stages::segmenter(require(&p.dictionary, "dictionary")?, p.hmm.as_deref())?;
                let cleaner = stages::scoring_cleaner(p.stopwords.as_deref())?;
                let scores = stages::score_articles(require(&p.corpus, "corpus")?, &self.at("cache.tsv"), &seg, &cleaner)?;
                stages::write(&self.at("article_scores.csv"), &factor::article_scores_to_csv(&scores))?;
                let degenerate = scores.iter().filter(|s| s.degenerate).count();
                Ok(format!("{} articles, {degenerate} without cached words", scores.len()))
            }
            "factor" => {
                let scores = factor::load_article_scores(self.at("article_scores.csv"))?;
                let (standard, adjusted) = stages::factors(&scores, self.cfg.factor.window)?;
                factor::write_factors(self.at("factor.csv"), &[&standard, &adjusted])?;
                Ok(format!("{} days", standard.len()))
            }
            "analyze" => {
                let market = ingest::load_market_csv(require(&p.market, "market")?)?;
                let rows = stages::analyze(&self.at("factor.csv"), &market, self.cfg.analysis.returns)?;
                analysis::write_report(self.at("report.csv"), &rows)?;
                Ok(rows
                    .iter()
                    .map(|r| format!("{}/{} rho {:.4}", r.factor_kind, r.target, r.rho))
                    .collect::<Vec<_>>()
                    .join(", "))
            }
            "baseline" => {
                let market = ingest::load_market_csv(require(&p.market, "market")?)?;
                let want = |b: &str| self.cfg.analysis.baselines.iter().any(|x| x == b);
                let temperature = if want("temperature") {
                    Some(require(&p.temperature, "temperature")?)
                } else {
                    None
                };
                let req = BaselineRequest {
                    random: want("random"),
                    temperature,
                    trials: self.cfg.analysis.trials,
                    seed: self.seeds["baseline"],
                };
                let rows = stages::baselines(&self.at("factor.csv"), &market, &req)?;
                analysis::write_report(self.at("baselines.csv"), &rows)?;
                Ok(format!("{} baselines", rows.len()))
            }
            "plot" => {
                let market = ingest::load_market_csv(require(&p.market, "market")?)?;
                stages::plot(&self.at("factor.csv"), &market, &self.at("chart.svg"))?;
                Ok("chart written".into())
            }
            other => bail!("unknown stage {other:?}"),
        }
    }
}

fn seeds(root: u64) -> BTreeMap<String, u64> {
    ["train", "baseline"]
        .into_iter()
        .map(|s| (s.to_string(), derive_seed(root, s)))
        .collect()
}

fn check_inputs_exist(cfg: &PipelineConfig) -> Result<()> {
    for (name, path) in cfg.paths.named() {
        ensure!(path.exists(), "input {name} not found at {}", path.display());
    }
    Ok(())
}

/// Runs every stage into `out`, then writes the config snapshot and manifest.
pub fn run(cfg: &PipelineConfig, out: &Path, build: &str, log: &mut dyn FnMut(&str, &str)) -> Result<Manifest, StageFailure> {
    let cfg = in_stage("setup", absolute(cfg))?;
    in_stage("setup", cfg.validate())?;
    in_stage("setup", check_inputs_exist(&cfg))?;
    in_stage(
        "setup",
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display())),
    )?;
    let inputs = in_stage("setup", input_digests(&cfg))?;
    let run = Run {
        cfg: &cfg,
        out,
        seeds: seeds(cfg.seed),
    };
    let mut artifacts = BTreeMap::new();
    for stage in STAGES {
        let msg = in_stage(stage, run.stage(stage))?;
        log(stage, &msg);
        for f in stage_outputs(stage, &cfg) {
            artifacts.insert(f.to_string(), in_stage(stage, file_digest(&out.join(f)))?);
        }
    }
    let manifest = Manifest {
        build: build.to_string(),
        root_seed: cfg.seed,
        stage_seeds: run.seeds.clone(),
        config: cfg.clone(),
        inputs,
        artifacts,
        stages: STAGES.iter().map(|s| s.to_string()).collect(),
    };
    in_stage("manifest", stages::write(&out.join("config.toml"), &cfg.to_toml()))?;
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    in_stage("manifest", stages::write(&out.join(MANIFEST), &json))?;
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

/// Re-executes stages recorded in a manifest and checks that inputs and
/// outputs still hash to the recorded digests.
pub fn rerun(
    manifest_path: &Path,
    only: Option<&str>,
    out: Option<&Path>,
    log: &mut dyn FnMut(&str, &str),
) -> Result<(), StageFailure> {
    let manifest = in_stage("manifest", load_manifest(manifest_path))?;
    let default_out = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let out = out.map_or(default_out, Path::to_path_buf);
    let cfg = &manifest.config;
    let inputs = in_stage("manifest", input_digests(cfg))?;
    for (name, digest) in &manifest.inputs {
        if inputs.get(name) != Some(digest) {
            return Err(StageFailure {
                stage: "manifest".into(),
                error: anyhow::anyhow!("input {name} changed since the manifest was written"),
            });
        }
    }
    let seeds = seeds(manifest.root_seed);
    if seeds != manifest.stage_seeds {
        return Err(StageFailure {
            stage: "manifest".into(),
            error: anyhow::anyhow!("recorded stage seeds do not match the root seed"),
        });
    }
    let selected: Vec<&str> = match only {
        Some(s) if STAGES.contains(&s) => vec![s],
        Some(s) => {
            return Err(StageFailure {
                stage: "manifest".into(),
                error: anyhow::anyhow!("unknown stage {s:?}; stages are {}", STAGES.join(", ")),
            })
        }
        None => STAGES.to_vec(),
    };
    in_stage("setup", std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display())))?;
    let run = Run { cfg, out: &out, seeds };
    for stage in selected {
        let msg = in_stage(stage, run.stage(stage))?;
        log(stage, &msg);
        for f in stage_outputs(stage, cfg) {
            let got = in_stage(stage, file_digest(&out.join(f)))?;
            if manifest.artifacts.get(f) != Some(&got) {
                return Err(StageFailure {
                    stage: stage.into(),
                    error: anyhow::anyhow!("{f} does not match the digest recorded in the manifest"),
                });
            }
        }
    }
    Ok(())
}
