//! Run configuration: a TOML file whose values command-line flags override.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use finsenti::embeddings::{BatchMode, LrSchedule, Mode, TrainConfig};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub dictionary: Option<PathBuf>,
    pub hmm: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub common_words: Option<PathBuf>,
    /// Directory holding `synsets.tsv`, `edges.tsv` and `mapping.tsv`.
    pub graph: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub training: Option<PathBuf>,
    pub market: Option<PathBuf>,
    pub temperature: Option<PathBuf>,
    pub labeled: Option<PathBuf>,
    /// Pre-trained model; the pipeline skips training when set.
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub mode: String,
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub schedule: String,
    pub min_count: u64,
    pub subsequence_len: usize,
    pub batch: String,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            mode: d.mode.to_string(),
            dim: d.dim,
            window: d.window,
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            schedule: "linear".into(),
            min_count: d.min_count,
            subsequence_len: d.subsequence_len,
            batch: "sgd".into(),
        }
    }
}

impl TrainSection {
    pub fn to_train_config(&self, seed: u64) -> Result<TrainConfig> {
        let mode: Mode = self.mode.parse().map_err(|_| anyhow::anyhow!("unknown mode {:?}", self.mode))?;
        let schedule = match self.schedule.as_str() {
            "linear" => LrSchedule::LinearDecay,
            "constant" => LrSchedule::Constant,
            s => bail!("unknown schedule {s:?} (expected linear or constant)"),
        };
        let batch = match self.batch.as_str() {
            "sgd" => BatchMode::Stochastic,
            "full" => BatchMode::FullBatch,
            s => bail!("unknown batch mode {s:?} (expected sgd or full)"),
        };
        ensure!((1..=1000).contains(&self.dim), "train.dim must be in 1..=1000");
        ensure!((1..=50).contains(&self.window), "train.window must be in 1..=50");
        ensure!(
            self.learning_rate.is_finite() && self.learning_rate > 0.0,
            "train.learning_rate must be positive"
        );
        Ok(TrainConfig {
            mode,
            dim: self.dim,
            window: self.window,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            schedule,
            min_count: self.min_count,
            subsequence_len: self.subsequence_len,
            seed,
            batch,
            track_loss: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    pub n: usize,
    pub m: usize,
    /// Minimum |score| for a word to count in the label evaluation.
    pub threshold: f64,
}

impl Default for ScoreSection {
    fn default() -> Self {
        Self {
            n: finsenti::senti::DEFAULT_TOP_N,
            m: finsenti::senti::DEFAULT_TOP_M,
            threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorSection {
    pub window: usize,
}

impl Default for FactorSection {
    fn default() -> Self {
        Self {
            window: finsenti::factor::DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub trials: usize,
    pub baselines: Vec<String>,
    /// Also correlate first differences.
    pub returns: bool,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            trials: 1000,
            baselines: vec!["random".into(), "temperature".into()],
            returns: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: Paths,
    pub train: TrainSection,
    pub score: ScoreSection,
    pub factor: FactorSection,
    pub analysis: AnalysisSection,
}

impl PipelineConfig {
    /// Reads a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        Ok(cfg)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.train.to_train_config(self.seed)?;
        let s = &self.score;
        ensure!(s.m >= 1 && s.m <= s.n, "score.m must satisfy 1 <= m <= n");
        ensure!(s.threshold >= 0.0 && s.threshold <= 1.0, "score.threshold must be in [0, 1]");
        ensure!(self.factor.window >= 1, "factor.window must be at least 1");
        ensure!(self.analysis.trials >= 1, "analysis.trials must be at least 1");
        for b in &self.analysis.baselines {
            ensure!(
                b == "random" || b == "temperature",
                "unknown baseline {b:?} (expected random or temperature)"
            );
        }
        Ok(())
    }
}

impl Paths {
    fn all_mut(&mut self) -> [&mut Option<PathBuf>; 12] {
        [
            &mut self.dictionary,
            &mut self.hmm,
            &mut self.stopwords,
            &mut self.lexicon,
            &mut self.common_words,
            &mut self.graph,
            &mut self.corpus,
            &mut self.training,
            &mut self.market,
            &mut self.temperature,
            &mut self.labeled,
            &mut self.embeddings,
        ]
    }

    fn resolve(&mut self, base: &Path) {
        for p in self.all_mut().into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Named inputs that are set, in a fixed order.
    pub fn named(&self) -> Vec<(&'static str, &Path)> {
        let entries: [(&str, &Option<PathBuf>); 12] = [
            ("dictionary", &self.dictionary),
            ("hmm", &self.hmm),
            ("stopwords", &self.stopwords),
            ("lexicon", &self.lexicon),
            ("common_words", &self.common_words),
            ("graph", &self.graph),
            ("corpus", &self.corpus),
            ("training", &self.training),
            ("market", &self.market),
            ("temperature", &self.temperature),
            ("labeled", &self.labeled),
            ("embeddings", &self.embeddings),
        ];
        entries
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|p| (k, p)))
            .collect()
    }
}

/// Returns the path or an error naming the missing setting.
pub fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .with_context(|| format!("no {what} given (set paths.{what} in the config or pass --{})", what.replace('_', "-")))
}
