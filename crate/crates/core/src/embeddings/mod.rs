//! Word embeddings trained from scratch with full-softmax Skip-gram or CBOW.
//!
//! Every word owns a center vector `v` and a background vector `u`. Skip-gram
//! models `P(background | center)` and exposes center vectors for similarity
//! queries; CBOW models `P(center | mean of background vectors)` and exposes
//! background vectors.

mod objective;
mod train;

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use objective::{
    cbow_contexts, context_positions, corpus_loss, full_batch_gradient, grad_cbow, grad_skipgram,
    log_softmax, loss_cbow, loss_skipgram, softmax_prob_cbow, softmax_prob_skipgram, CbowGrad,
    SkipGramGrad, TableGrad,
};
pub use train::{train, BatchMode, LrSchedule, TrainConfig, TrainReport};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vocabulary is empty after applying min_count {0}")]
    EmptyVocabulary(u64),
    #[error("invalid training configuration: {0}")]
    BadConfig(String),
    #[error("training diverged: non-finite parameters after epoch {0}")]
    Diverged(usize),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed model file: {message}")]
    BadModelFile { path: PathBuf, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("{0:?} is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("{0:?} has a zero query vector")]
    ZeroVector(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    SkipGram,
    Cbow,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SkipGram => "skipgram",
            Mode::Cbow => "cbow",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "skipgram" | "skip-gram" => Ok(Mode::SkipGram),
            "cbow" => Ok(Mode::Cbow),
            other => Err(format!("unknown mode {other:?}, expected skipgram or cbow")),
        }
    }
}

/// Dense word indices ordered by descending count, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Result<Self, EmbeddingError> {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for sentence in corpus {
            for w in sentence {
                *counts.entry(w.as_ref()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
        if kept.is_empty() {
            return Err(EmbeddingError::EmptyVocabulary(min_count));
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_counts(
            kept.into_iter().map(|(w, c)| (w.to_string(), c)).collect(),
            min_count,
        ))
    }

    fn from_counts(entries: Vec<(String, u64)>, min_count: u64) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Self {
            words,
            counts,
            index,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Maps tokens to indices, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.index_of(t.as_ref())).collect()
    }
}

/// Center (`v`) and background (`u`) tables, row-major `|D| × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    vocab: Vocabulary,
    dim: usize,
    mode: Mode,
    seed: u64,
    center: Vec<f64>,
    background: Vec<f64>,
}

impl EmbeddingModel {
    pub fn zeros(vocab: Vocabulary, dim: usize, mode: Mode) -> Self {
        let n = vocab.len() * dim;
        Self {
            vocab,
            dim,
            mode,
            seed: 0,
            center: vec![0.0; n],
            background: vec![0.0; n],
        }
    }

    /// Center entries uniform in `[-0.5/dim, 0.5/dim]`, background zero.
    pub fn initialized(vocab: Vocabulary, dim: usize, mode: Mode, rng: &mut ChaCha8Rng, seed: u64) -> Self {
        let mut model = Self::zeros(vocab, dim, mode);
        model.seed = seed;
        let half = 0.5 / dim as f64;
        for x in &mut model.center {
            *x = rng.random_range(-half..=half);
        }
        model
    }

    pub fn with_seed(vocab: Vocabulary, dim: usize, mode: Mode, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::initialized(vocab, dim, mode, &mut rng, seed)
    }

    /// Builds a model from explicit `(word, center, background)` rows. Counts
    /// are set to 1.
    pub fn from_rows(mode: Mode, rows: Vec<(String, Vec<f64>, Vec<f64>)>) -> Self {
        let dim = rows.first().map_or(0, |r| r.1.len());
        let mut center = Vec::with_capacity(rows.len() * dim);
        let mut background = Vec::with_capacity(rows.len() * dim);
        let mut entries = Vec::with_capacity(rows.len());
        for (w, v, u) in rows {
            assert!(v.len() == dim && u.len() == dim, "row width mismatch for {w:?}");
            center.extend(v);
            background.extend(u);
            entries.push((w, 1));
        }
        Self {
            vocab: Vocabulary::from_counts(entries, 1),
            dim,
            mode,
            seed: 0,
            center,
            background,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn center(&self, i: usize) -> &[f64] {
        &self.center[i * self.dim..(i + 1) * self.dim]
    }

    pub fn background(&self, i: usize) -> &[f64] {
        &self.background[i * self.dim..(i + 1) * self.dim]
    }

    pub fn center_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.center[i * self.dim..(i + 1) * self.dim]
    }

    pub fn background_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.background[i * self.dim..(i + 1) * self.dim]
    }

    pub fn center_table(&self) -> &[f64] {
        &self.center
    }

    pub fn background_table(&self) -> &[f64] {
        &self.background
    }

    pub(crate) fn tables_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.center, &mut self.background)
    }

    pub fn is_finite(&self) -> bool {
        self.center.iter().chain(&self.background).all(|x| x.is_finite())
    }

    /// The vector used for similarity: center for Skip-gram, background for CBOW.
    pub fn query_vector(&self, i: usize) -> &[f64] {
        match self.mode {
            Mode::SkipGram => self.center(i),
            Mode::Cbow => self.background(i),
        }
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.vocab.index_of(word).map(|i| self.query_vector(i))
    }

    pub fn cosine(&self, word1: &str, word2: &str) -> Result<f64, SimilarityError> {
        let lookup = |w: &str| {
            self.vector(w)
                .ok_or_else(|| SimilarityError::OutOfVocabulary(w.to_string()))
        };
        let (a, b) = (lookup(word1)?, lookup(word2)?);
        for (w, v) in [(word1, a), (word2, b)] {
            if norm(v) == 0.0 {
                return Err(SimilarityError::ZeroVector(w.to_string()));
            }
        }
        Ok(cosine_similarity(a, b).expect("norms checked"))
    }

    /// Text serialization. Floats use shortest round-trip formatting, so
    /// `parse(to_text(m)) == m` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::from("finsenti-embeddings 1\n");
        let _ = writeln!(out, "mode\t{}", self.mode);
        let _ = writeln!(out, "vocab\t{}", self.len());
        let _ = writeln!(out, "dim\t{}", self.dim);
        let _ = writeln!(out, "seed\t{}", self.seed);
        let _ = writeln!(out, "min_count\t{}", self.vocab.min_count);
        for (w, c) in self.vocab.words.iter().zip(&self.vocab.counts) {
            let _ = writeln!(out, "{w}\t{c}");
        }
        for (name, table) in [("center", &self.center), ("background", &self.background)] {
            out.push_str(name);
            out.push('\n');
            for row in table.chunks(self.dim.max(1)) {
                let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, EmbeddingError> {
        let bad = |message: String| EmbeddingError::BadModelFile {
            path: path.to_path_buf(),
            message,
        };
        let mut lines = text.lines();
        if lines.next() != Some("finsenti-embeddings 1") {
            return Err(bad("missing header line".into()));
        }
        let mut field = |name: &str| -> Result<String, EmbeddingError> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {name}")))?;
            match line.split_once('\t') {
                Some((k, v)) if k == name => Ok(v.to_string()),
                _ => Err(bad(format!("expected `{name}<TAB>value`, got {line:?}"))),
            }
        };
        let mode: Mode = field("mode")?.parse().map_err(bad)?;
        let num = |s: String, what: &str| s.parse::<u64>().map_err(|_| bad(format!("invalid {what}")));
        let n = num(field("vocab")?, "vocab size")? as usize;
        let dim = num(field("dim")?, "dim")? as usize;
        let seed = num(field("seed")?, "seed")?;
        let min_count = num(field("min_count")?, "min_count")?;
        let mut entries = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| bad("truncated vocabulary".into()))?;
            let (w, c) = line
                .rsplit_once('\t')
                .ok_or_else(|| bad(format!("bad vocabulary line {line:?}")))?;
            entries.push((w.to_string(), num(c.to_string(), "count")?));
        }
        let mut table = |name: &str| -> Result<Vec<f64>, EmbeddingError> {
            if lines.next() != Some(name) {
                return Err(bad(format!("expected `{name}` section")));
            }
            let mut out = Vec::with_capacity(n * dim);
            for _ in 0..n {
                let line = lines.next().ok_or_else(|| bad(format!("truncated {name} table")))?;
                let row: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
                let row = row.map_err(|_| bad(format!("bad number in {name} table")))?;
                if row.len() != dim {
                    return Err(bad(format!("{name} row has {} columns, expected {dim}", row.len())));
                }
                out.extend(row);
            }
            Ok(out)
        };
        let center = table("center")?;
        let background = table("background")?;
        Ok(Self {
            vocab: Vocabulary::from_counts(entries, min_count),
            dim,
            mode,
            seed,
            center,
            background,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine of the angle between two vectors, `None` if either is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}
