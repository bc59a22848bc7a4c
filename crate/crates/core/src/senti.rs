//! Word sentiment scores anchored on a balanced ±1 lexicon.
//!
//! Each word gets one embedding cosine and one graph similarity per lexicon
//! word. Scoring keeps the `n` lexicon words with the highest cosine, narrows
//! them to the `m` with the highest graph similarity (or highest cosine when
//! the word has no graph similarities at all), and returns the average of
//! their labels weighted by the clamped cosines.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::embeddings::{cosine_similarity, norm, EmbeddingModel};
use crate::ingest::{self, IngestError, LabeledWord, WordListKind};
use crate::par;
use crate::semgraph::SynsetGraph;

/// Default size of the first, cosine-ranked selection.
pub const DEFAULT_TOP_N: usize = 20;
/// Default size of the second, graph-ranked selection.
pub const DEFAULT_TOP_M: usize = 5;

#[derive(Debug, Error)]
pub enum SentiError {
    #[error("lexicon must be non-empty and balanced, found {positive} positive and {negative} negative words")]
    UnbalancedLexicon { positive: usize, negative: usize },
    #[error("lexicon labels must be +1 or -1 ({0:?})")]
    BadLexiconLabel(String),
    #[error("duplicate lexicon word {0:?}")]
    DuplicateLexiconWord(String),
    #[error("{0:?} is not in the embedding vocabulary")]
    OutOfVocabulary(String),
    #[error("{0:?} has a zero embedding vector")]
    ZeroVector(String),
    #[error("invalid selection sizes n={n}, m={m}: need 1 <= m <= n <= {max}")]
    BadSelection { n: usize, m: usize, max: usize },
    #[error("similarity vector has {got} dimensions per half, lexicon has {expected} words")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed cache entry")]
    BadCacheLine { path: PathBuf, line: usize },
}

/// Ordered lexicon; the order fixes the similarity-vector dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentimentLexicon {
    words: Vec<String>,
    labels: Vec<i8>,
}

impl SentimentLexicon {
    pub fn new(entries: Vec<LabeledWord>) -> Result<Self, SentiError> {
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if e.label != 1 && e.label != -1 {
                return Err(SentiError::BadLexiconLabel(e.word.clone()));
            }
            if !seen.insert(e.word.as_str()) {
                return Err(SentiError::DuplicateLexiconWord(e.word.clone()));
            }
        }
        let positive = entries.iter().filter(|e| e.label == 1).count();
        let negative = entries.len() - positive;
        if positive != negative || positive == 0 {
            return Err(SentiError::UnbalancedLexicon { positive, negative });
        }
        let (words, labels) = entries.into_iter().map(|e| (e.word, e.label)).unzip();
        Ok(Self { words, labels })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SentiError> {
        Self::new(ingest::load_word_list(path, WordListKind::Lexicon)?.into_labeled())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn entries(&self) -> Vec<LabeledWord> {
        self.words
            .iter()
            .zip(&self.labels)
            .map(|(w, &l)| LabeledWord {
                word: w.clone(),
                label: l,
            })
            .collect()
    }
}

/// Similarities of one word against every lexicon word, in lexicon order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityVector {
    /// Embedding cosines; −1 where the lexicon word has no usable vector.
    pub w2v: Vec<f64>,
    /// Graph path similarities; `None` where either word is unmapped.
    pub sem: Vec<Option<f64>>,
    /// Whether at least one graph similarity is defined.
    pub sem_available: bool,
}

impl SimilarityVector {
    /// A vector with no graph information.
    pub fn w2v_only(w2v: Vec<f64>) -> Self {
        let sem = vec![None; w2v.len()];
        Self {
            w2v,
            sem,
            sem_available: false,
        }
    }

    pub fn new(w2v: Vec<f64>, sem: Vec<Option<f64>>) -> Self {
        assert_eq!(w2v.len(), sem.len(), "both halves must cover the lexicon");
        let sem_available = sem.iter().any(Option::is_some);
        Self {
            w2v,
            sem,
            sem_available,
        }
    }

    /// Cosine half followed by the graph half, NaN where unavailable.
    pub fn to_dense(&self) -> Vec<f64> {
        self.w2v
            .iter()
            .copied()
            .chain(self.sem.iter().map(|s| s.unwrap_or(f64::NAN)))
            .collect()
    }
}

pub fn similarity_vector(
    word: &str,
    model: &EmbeddingModel,
    graph: &SynsetGraph,
    lexicon: &SentimentLexicon,
) -> Result<SimilarityVector, SentiError> {
    let v = model
        .vector(word)
        .ok_or_else(|| SentiError::OutOfVocabulary(word.to_string()))?;
    if norm(v) == 0.0 {
        return Err(SentiError::ZeroVector(word.to_string()));
    }
    let w2v = lexicon
        .words()
        .iter()
        .map(|lw| {
            model
                .vector(lw)
                .and_then(|u| cosine_similarity(v, u))
                .unwrap_or(-1.0)
        })
        .collect();
    Ok(match graph.word_similarities(word, lexicon.words()) {
        Some(sem) => SimilarityVector::new(w2v, sem),
        None => SimilarityVector::w2v_only(w2v),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Cosine and graph similarities both used.
    Full,
    /// No graph similarity available; cosine only.
    Fallback,
    /// Word absent from the score cache.
    CacheMiss,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Full => "full",
            Provenance::Fallback => "fallback",
            Provenance::CacheMiss => "cache_miss",
        })
    }
}

impl FromStr for Provenance {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "full" => Ok(Provenance::Full),
            "fallback" => Ok(Provenance::Fallback),
            "cache_miss" => Ok(Provenance::CacheMiss),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentiScore {
    pub value: f64,
    pub provenance: Provenance,
}

/// Lexicon indices picked by the two selection stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub top_n: Vec<usize>,
    pub top_m: Vec<usize>,
    pub provenance: Provenance,
}

fn check_sizes(len: usize, n: usize, m: usize) -> Result<(), SentiError> {
    if m == 0 || m > n || n > len {
        return Err(SentiError::BadSelection { n, m, max: len });
    }
    Ok(())
}

/// Descending by key, ties by ascending lexicon index. Adding 0.0 folds −0.0
/// into +0.0 so the two compare equal.
fn rank_by(indices: &mut [usize], key: impl Fn(usize) -> f64) {
    indices.sort_by(|&a, &b| match (key(b) + 0.0).total_cmp(&(key(a) + 0.0)) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
}

/// Runs both selection stages. Lexicon words with cosine −1 (no vector) are
/// never selected; unavailable graph entries rank below every defined one.
pub fn select(vec: &SimilarityVector, n: usize, m: usize) -> Result<Selection, SentiError> {
    check_sizes(vec.w2v.len(), n, m)?;
    let mut candidates: Vec<usize> = (0..vec.w2v.len()).filter(|&i| vec.w2v[i] > -1.0).collect();
    rank_by(&mut candidates, |i| vec.w2v[i]);
    candidates.truncate(n);
    let mut top_m = candidates.clone();
    let provenance = if vec.sem_available {
        rank_by(&mut top_m, |i| vec.sem[i].unwrap_or(-1.0));
        Provenance::Full
    } else {
        Provenance::Fallback
    };
    top_m.truncate(m);
    Ok(Selection {
        top_n: candidates,
        top_m,
        provenance,
    })
}

/// Weighted average of the selected labels, weights `max(cosine, 0)`.
/// Zero total weight scores 0.
pub fn senti_score(
    vec: &SimilarityVector,
    lexicon: &SentimentLexicon,
    n: usize,
    m: usize,
) -> Result<SentiScore, SentiError> {
    if vec.w2v.len() != lexicon.len() || vec.sem.len() != lexicon.len() {
        return Err(SentiError::DimensionMismatch {
            got: vec.w2v.len(),
            expected: lexicon.len(),
        });
    }
    let sel = select(vec, n, m)?;
    let (mut num, mut den) = (0.0, 0.0);
    for &i in &sel.top_m {
        let w = vec.w2v[i].max(0.0);
        num += w * f64::from(lexicon.labels()[i]);
        den += w;
    }
    let value = if den > 0.0 { (num / den).clamp(-1.0, 1.0) } else { 0.0 };
    Ok(SentiScore {
        value,
        provenance: sel.provenance,
    })
}

pub fn score_word(
    word: &str,
    model: &EmbeddingModel,
    graph: &SynsetGraph,
    lexicon: &SentimentLexicon,
    n: usize,
    m: usize,
) -> Result<SentiScore, SentiError> {
    senti_score(&similarity_vector(word, model, graph, lexicon)?, lexicon, n, m)
}

/// Precomputed scores for the common word set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreCache {
    scores: BTreeMap<String, SentiScore>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheBuild {
    pub cache: ScoreCache,
    pub fallback_count: usize,
    /// Common words skipped because they have no usable embedding.
    pub omitted: Vec<String>,
}

/// Scores every common word present in the embedding vocabulary, in
/// parallel when enabled.
pub fn build_cache<S: AsRef<str> + Sync>(
    common_words: &[S],
    model: &EmbeddingModel,
    graph: &SynsetGraph,
    lexicon: &SentimentLexicon,
    n: usize,
    m: usize,
) -> Result<CacheBuild, SentiError> {
    check_sizes(lexicon.len(), n, m)?;
    let results = par::map_slice(common_words, |w| score_word(w.as_ref(), model, graph, lexicon, n, m));
    let mut scores = BTreeMap::new();
    let mut omitted = Vec::new();
    for (w, r) in common_words.iter().map(AsRef::as_ref).zip(results) {
        match r {
            Ok(s) => {
                scores.insert(w.to_string(), s);
            }
            Err(SentiError::OutOfVocabulary(_) | SentiError::ZeroVector(_)) => omitted.push(w.to_string()),
            Err(e) => return Err(e),
        }
    }
    omitted.sort();
    omitted.dedup();
    let cache = ScoreCache { scores };
    Ok(CacheBuild {
        fallback_count: cache.fallback_count(),
        cache,
        omitted,
    })
}

impl ScoreCache {
    pub fn from_scores(scores: BTreeMap<String, SentiScore>) -> Self {
        Self { scores }
    }

    pub fn get(&self, word: &str) -> Option<&SentiScore> {
        self.scores.get(word)
    }

    /// The cached score, or a zero-valued cache miss.
    pub fn lookup(&self, word: &str) -> SentiScore {
        self.get(word).copied().unwrap_or(SentiScore {
            value: 0.0,
            provenance: Provenance::CacheMiss,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &SentiScore)> {
        self.scores.iter().map(|(w, s)| (w.as_str(), s))
    }

    pub fn fallback_count(&self) -> usize {
        self.scores
            .values()
            .filter(|s| s.provenance == Provenance::Fallback)
            .count()
    }

    /// `word<TAB>score<TAB>provenance` lines in lexicographic order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (w, s) in &self.scores {
            let _ = writeln!(out, "{w}\t{:?}\t{}", s.value, s.provenance);
        }
        out
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, SentiError> {
        let mut scores = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || SentiError::BadCacheLine {
                path: path.to_path_buf(),
                line: i + 1,
            };
            let mut f = line.split('\t');
            let (Some(w), Some(v), Some(p), None) = (f.next(), f.next(), f.next(), f.next()) else {
                return Err(bad());
            };
            let value: f64 = v.parse().map_err(|_| bad())?;
            let provenance: Provenance = p.parse().map_err(|_| bad())?;
            if !(value.abs() <= 1.0) {
                return Err(bad());
            }
            scores.insert(w.to_string(), SentiScore { value, provenance });
        }
        Ok(Self { scores })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SentiError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_tsv()).map_err(|source| SentiError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SentiError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SentiError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }
}

/// Sign agreement between cached scores and human labels.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub evaluated: usize,
    pub correct: usize,
    /// `correct / evaluated`; `None` when nothing was evaluated.
    pub accuracy: Option<f64>,
    pub excluded_indeterminate: usize,
    pub excluded_below_threshold: usize,
    pub excluded_missing: usize,
}

/// Compares `sign(score)` with each label, skipping label-0 words, cache
/// misses and words with `|score| < threshold`.
pub fn evaluate_labels(cache: &ScoreCache, labeled: &[LabeledWord], threshold: f64) -> AccuracyReport {
    let mut report = AccuracyReport {
        evaluated: 0,
        correct: 0,
        accuracy: None,
        excluded_indeterminate: 0,
        excluded_below_threshold: 0,
        excluded_missing: 0,
    };
    for lw in labeled {
        if lw.label == 0 {
            report.excluded_indeterminate += 1;
            continue;
        }
        let Some(score) = cache.get(&lw.word) else {
            report.excluded_missing += 1;
            continue;
        };
        if score.value.abs() < threshold {
            report.excluded_below_threshold += 1;
            continue;
        }
        report.evaluated += 1;
        let sign = if score.value > 0.0 {
            1
        } else if score.value < 0.0 {
            -1
        } else {
            0
        };
        if sign == lw.label {
            report.correct += 1;
        }
    }
    if report.evaluated > 0 {
        report.accuracy = Some(report.correct as f64 / report.evaluated as f64);
    }
    report
}
