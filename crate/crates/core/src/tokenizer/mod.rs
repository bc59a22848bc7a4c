//! Chinese word segmentation and token filtering.
//!
//! Runs of non-ASCII letters are segmented along the maximum-probability
//! route through the dictionary DAG. With the HMM enabled, maximal runs of
//! consecutive single-character segments that are not dictionary words are
//! re-segmented by BMES Viterbi decoding. ASCII alphanumeric runs, whitespace
//! runs and individual symbols pass through as their own tokens, so the
//! concatenated output always equals the input.

mod dag;
mod dict;
mod hmm;

use std::collections::HashSet;
use std::path::PathBuf;

use regex::Regex;
use thiserror::Error;

pub use dag::{best_path, best_path_scored, build_dag, segment_log_prob, SegmentationDag};
pub use dict::{PrefixTrie, SegmentationDictionary};
pub use hmm::{
    decode_tags, is_valid_tagging, path_log_prob, viterbi_bmes, HmmParams, Tag, EMISSION_FLOOR,
};

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    BadDictionary {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: {message}")]
    BadHmmFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid HMM parameters: {0}")]
    BadHmm(String),
    #[error("invalid strip pattern: {0}")]
    BadPattern(#[from] regex::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TokenizeOptions {
    pub use_hmm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Segmentable,
    AsciiWord,
    Space,
    Other,
}

fn classify(c: char) -> CharClass {
    if c.is_ascii_alphanumeric() {
        CharClass::AsciiWord
    } else if c.is_whitespace() {
        CharClass::Space
    } else if c.is_alphanumeric() {
        CharClass::Segmentable
    } else {
        CharClass::Other
    }
}

/// Splits text into maximal runs of one character class. A `.` between two
/// ASCII digits stays inside the number.
fn blocks(chars: &[char]) -> Vec<(CharClass, usize, usize)> {
    let mut out: Vec<(CharClass, usize, usize)> = Vec::new();
    for (i, &c) in chars.iter().enumerate() {
        let mut class = classify(c);
        if c == '.'
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())
        {
            class = CharClass::AsciiWord;
        }
        match out.last_mut() {
            Some((last, _, end)) if *last == class && class != CharClass::Other => *end = i + 1,
            _ => out.push((class, i, i + 1)),
        }
    }
    out
}

fn segment_block(
    chars: &[char],
    dict: &SegmentationDictionary,
    hmm: Option<&HmmParams>,
    out: &mut Vec<String>,
) {
    let dag = build_dag(chars, dict);
    let path = best_path(chars, &dag, dict);
    let Some(hmm) = hmm else {
        out.extend(path.iter().map(|&(s, e)| chars[s..e].iter().collect::<String>()));
        return;
    };
    let mut pending: Option<usize> = None;
    let flush = |from: usize, to: usize, out: &mut Vec<String>| {
        let span = &chars[from..to];
        out.extend(decode_tags(span, &viterbi_bmes(span, hmm)));
    };
    for &(s, e) in &path {
        let word: String = chars[s..e].iter().collect();
        let unknown_single = e - s == 1 && !dict.contains(&word);
        if unknown_single {
            pending.get_or_insert(s);
            continue;
        }
        if let Some(from) = pending.take() {
            flush(from, s, out);
        }
        out.push(word);
    }
    if let Some(from) = pending {
        flush(from, chars.len(), out);
    }
}

/// Segments `text` into words. Pure segmentation: `tokens.concat() == text`.
pub fn tokenize(
    text: &str,
    dict: &SegmentationDictionary,
    hmm: Option<&HmmParams>,
    options: TokenizeOptions,
) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let hmm = if options.use_hmm { hmm } else { None };
    let mut out = Vec::new();
    for (class, start, end) in blocks(&chars) {
        match class {
            CharClass::Segmentable => segment_block(&chars[start..end], dict, hmm, &mut out),
            _ => out.push(chars[start..end].iter().collect()),
        }
    }
    out
}

/// A dictionary plus optional HMM, shared by every scoring and training path.
#[derive(Debug, Clone)]
pub struct Segmenter {
    pub dict: SegmentationDictionary,
    pub hmm: Option<HmmParams>,
    pub options: TokenizeOptions,
}

impl Segmenter {
    pub fn new(dict: SegmentationDictionary, hmm: Option<HmmParams>) -> Self {
        let options = TokenizeOptions {
            use_hmm: hmm.is_some(),
        };
        Self { dict, hmm, options }
    }

    pub fn cut(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.dict, self.hmm.as_ref(), self.options)
    }
}

/// Token classes removed during cleaning.
#[derive(Debug, Clone)]
pub enum StripRule {
    /// Digits optionally mixed with `.`, `,`, `%`, `+`, `-`.
    Numeric,
    /// Tokens with no alphanumeric character (punctuation, symbols, spaces).
    Punctuation,
    /// Tokens fully matched by the expression.
    Pattern(Regex),
}

impl StripRule {
    pub fn pattern(expr: &str) -> Result<Self, TokenizerError> {
        Ok(StripRule::Pattern(Regex::new(&format!("^(?:{expr})$"))?))
    }

    fn matches(&self, token: &str) -> bool {
        match self {
            StripRule::Numeric => {
                token.chars().any(char::is_numeric)
                    && token
                        .chars()
                        .all(|c| c.is_numeric() || matches!(c, '.' | ',' | '%' | '+' | '-'))
            }
            StripRule::Punctuation => !token.chars().any(char::is_alphanumeric),
            StripRule::Pattern(re) => re.is_match(token),
        }
    }
}

/// Filters noise and stop words from a token stream.
#[derive(Debug, Clone)]
pub struct Cleaner {
    stopwords: HashSet<String>,
    rules: Vec<StripRule>,
}

impl Cleaner {
    pub fn new(stopwords: impl IntoIterator<Item = String>, rules: Vec<StripRule>) -> Self {
        Self {
            stopwords: stopwords.into_iter().collect(),
            rules,
        }
    }

    /// Stop words plus numeric and punctuation stripping, for scoring.
    pub fn for_scoring(stopwords: impl IntoIterator<Item = String>) -> Self {
        Self::new(stopwords, vec![StripRule::Numeric, StripRule::Punctuation])
    }

    /// Numeric and punctuation stripping only; stop words stay in training
    /// text because they shape the context of their neighbours.
    pub fn for_training() -> Self {
        Self::new([], vec![StripRule::Numeric, StripRule::Punctuation])
    }

    pub fn keeps(&self, token: &str) -> bool {
        !self.stopwords.contains(token) && !self.rules.iter().any(|r| r.matches(token))
    }

    pub fn clean(&self, words: Vec<String>) -> Vec<String> {
        words.into_iter().filter(|w| self.keeps(w)).collect()
    }
}

pub fn clean(words: Vec<String>, stopwords: &HashSet<String>, rules: &[StripRule]) -> Vec<String> {
    words
        .into_iter()
        .filter(|w| !stopwords.contains(w) && !rules.iter().any(|r| r.matches(w)))
        .collect()
}
