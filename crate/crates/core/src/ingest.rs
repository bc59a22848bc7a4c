//! Loaders and writers for every external data file the pipeline consumes.
//!
//! * corpus: one JSON object per line with keys `id`, `date`, `title`, `body`
//! * market / temperature: CSV with headers `date,close` / `date,temp`
//! * word lists: one entry per line, `word<TAB>label` for labeled kinds

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("article {id}: invalid date {value:?}")]
    BadArticleDate { id: String, value: String },
    #[error("duplicate article id {0:?}")]
    DuplicateId(String),
    #[error("{path}:{line}: invalid date {value:?}")]
    BadDate {
        path: PathBuf,
        line: usize,
        value: String,
    },
    #[error("{path}:{line}: close must be positive, got {value}")]
    NonPositiveClose {
        path: PathBuf,
        line: usize,
        value: f64,
    },
    #[error("{path}:{line}: date {date} does not follow {previous}")]
    OutOfOrder {
        path: PathBuf,
        line: usize,
        previous: NaiveDate,
        date: NaiveDate,
    },
    #[error("{path}:{line}: unparsable label {value:?}")]
    BadLabel {
        path: PathBuf,
        line: usize,
        value: String,
    },
    #[error("{path}:{line}: lexicon labels must be +1 or -1, got 0 for {word:?}")]
    NeutralLexiconWord {
        path: PathBuf,
        line: usize,
        word: String,
    },
    #[error("{path}: lexicon must be balanced, found {positive} positive and {negative} negative words")]
    UnbalancedLexicon {
        path: PathBuf,
        positive: usize,
        negative: usize,
    },
    #[error("{path}:{line}: duplicate word {word:?}")]
    DuplicateWord {
        path: PathBuf,
        line: usize,
        word: String,
    },
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_string(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT).ok()
}

/// A dated news item, the unit of scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsArticle {
    pub id: String,
    #[serde(with = "date_serde")]
    pub date: NaiveDate,
    pub title: String,
    pub body: String,
}

mod date_serde {
    use super::DATE_FORMAT;
    use chrono::NaiveDate;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(date: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&date.format(DATE_FORMAT))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let raw: String = serde::Deserialize::deserialize(d)?;
        NaiveDate::parse_from_str(&raw, DATE_FORMAT).map_err(serde::de::Error::custom)
    }
}

#[derive(Deserialize)]
struct RawArticle {
    id: String,
    date: String,
    title: String,
    body: String,
}

/// Parses a line-delimited JSON corpus. Blank lines are skipped. The result is
/// sorted by `(date, id)`.
pub fn parse_corpus(path: &Path, text: &str) -> Result<Vec<NewsArticle>> {
    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawArticle =
            serde_json::from_str(line).map_err(|e| IngestError::Malformed {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        let date = parse_date(&raw.date).ok_or_else(|| IngestError::BadArticleDate {
            id: raw.id.clone(),
            value: raw.date.clone(),
        })?;
        if !seen.insert(raw.id.clone()) {
            return Err(IngestError::DuplicateId(raw.id));
        }
        articles.push(NewsArticle {
            id: raw.id,
            date,
            title: raw.title,
            body: raw.body,
        });
    }
    articles.sort_by(|a, b| a.date.cmp(&b.date).then_with(|| a.id.cmp(&b.id)));
    Ok(articles)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<NewsArticle>> {
    let path = path.as_ref();
    parse_corpus(path, &read_to_string(path)?)
}

pub fn corpus_to_jsonl(articles: &[NewsArticle]) -> String {
    let mut out = String::new();
    for a in articles {
        // NewsArticle serialization cannot fail: all fields are strings.
        out.push_str(&serde_json::to_string(a).expect("article serializes"));
        out.push('\n');
    }
    out
}

pub fn write_corpus(path: impl AsRef<Path>, articles: &[NewsArticle]) -> Result<()> {
    write_string(path.as_ref(), &corpus_to_jsonl(articles))
}

/// Daily index closes with strictly increasing dates and positive values.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSeries {
    points: Vec<(NaiveDate, f64)>,
}

impl MarketSeries {
    /// Validates ordering and positivity. Errors report 1-based data rows.
    pub fn new(points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        validate_series(Path::new("<memory>"), &points, true)?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Daily temperatures with strictly increasing dates.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSeries {
    points: Vec<(NaiveDate, f64)>,
}

impl TemperatureSeries {
    pub fn new(points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        validate_series(Path::new("<memory>"), &points, false)?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(NaiveDate, f64)] {
        &self.points
    }
}

fn validate_series(path: &Path, points: &[(NaiveDate, f64)], positive: bool) -> Result<()> {
    for (i, &(date, value)) in points.iter().enumerate() {
        // header occupies line 1
        let line = i + 2;
        if !value.is_finite() || (positive && value <= 0.0) {
            return Err(IngestError::NonPositiveClose {
                path: path.to_path_buf(),
                line,
                value,
            });
        }
        if i > 0 && points[i - 1].0 >= date {
            return Err(IngestError::OutOfOrder {
                path: path.to_path_buf(),
                line,
                previous: points[i - 1].0,
                date,
            });
        }
    }
    Ok(())
}

fn parse_dated_csv(path: &Path, text: &str, value_column: &str) -> Result<Vec<(NaiveDate, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let malformed = |line: usize, message: String| IngestError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != value_column {
        return Err(malformed(
            1,
            format!("expected header `date,{value_column}`, got `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| malformed(line, e.to_string()))?;
        let date = parse_date(&record[0]).ok_or_else(|| IngestError::BadDate {
            path: path.to_path_buf(),
            line,
            value: record[0].to_string(),
        })?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| malformed(line, format!("invalid number {:?}", &record[1])))?;
        points.push((date, value));
    }
    Ok(points)
}

pub fn parse_market_csv(path: &Path, text: &str) -> Result<MarketSeries> {
    let points = parse_dated_csv(path, text, "close")?;
    validate_series(path, &points, true)?;
    Ok(MarketSeries { points })
}

pub fn load_market_csv(path: impl AsRef<Path>) -> Result<MarketSeries> {
    let path = path.as_ref();
    parse_market_csv(path, &read_to_string(path)?)
}

pub fn parse_temperature_csv(path: &Path, text: &str) -> Result<TemperatureSeries> {
    let points = parse_dated_csv(path, text, "temp")?;
    validate_series(path, &points, false)?;
    Ok(TemperatureSeries { points })
}

pub fn load_temperature_csv(path: impl AsRef<Path>) -> Result<TemperatureSeries> {
    let path = path.as_ref();
    parse_temperature_csv(path, &read_to_string(path)?)
}

fn dated_csv(column: &str, points: &[(NaiveDate, f64)]) -> String {
    let mut out = format!("date,{column}\n");
    for (date, value) in points {
        let _ = writeln!(out, "{},{value:?}", date.format(DATE_FORMAT));
    }
    out
}

pub fn market_to_csv(series: &MarketSeries) -> String {
    dated_csv("close", &series.points)
}

pub fn temperature_to_csv(series: &TemperatureSeries) -> String {
    dated_csv("temp", &series.points)
}

pub fn write_market_csv(path: impl AsRef<Path>, series: &MarketSeries) -> Result<()> {
    write_string(path.as_ref(), &market_to_csv(series))
}

pub fn write_temperature_csv(path: impl AsRef<Path>, series: &TemperatureSeries) -> Result<()> {
    write_string(path.as_ref(), &temperature_to_csv(series))
}

/// A human-labeled evaluation word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledWord {
    pub word: String,
    pub label: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WordListKind {
    StopWords,
    CommonWords,
    Lexicon,
    Labeled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordList {
    /// Plain word set (stop words, common words), lexicographically ordered.
    Set(BTreeSet<String>),
    /// Labeled entries in file order.
    Labeled(Vec<LabeledWord>),
}

impl WordList {
    pub fn into_set(self) -> BTreeSet<String> {
        match self {
            WordList::Set(s) => s,
            WordList::Labeled(v) => v.into_iter().map(|w| w.word).collect(),
        }
    }

    pub fn into_labeled(self) -> Vec<LabeledWord> {
        match self {
            WordList::Set(s) => s
                .into_iter()
                .map(|word| LabeledWord { word, label: 0 })
                .collect(),
            WordList::Labeled(v) => v,
        }
    }
}

pub fn parse_word_list(path: &Path, text: &str, kind: WordListKind) -> Result<WordList> {
    let entries = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());
    match kind {
        WordListKind::StopWords | WordListKind::CommonWords => Ok(WordList::Set(
            entries
                .map(|(_, l)| l.split('\t').next().unwrap_or("").trim().to_string())
                .collect(),
        )),
        WordListKind::Lexicon | WordListKind::Labeled => {
            let mut out = Vec::new();
            let mut seen = HashSet::new();
            for (line, l) in entries {
                let (word, label) = l.split_once('\t').ok_or_else(|| IngestError::Malformed {
                    path: path.to_path_buf(),
                    line,
                    message: "expected `word<TAB>label`".into(),
                })?;
                let word = word.trim().to_string();
                let label = match label.trim() {
                    "1" | "+1" => 1,
                    "-1" => -1,
                    "0" => 0,
                    other => {
                        return Err(IngestError::BadLabel {
                            path: path.to_path_buf(),
                            line,
                            value: other.to_string(),
                        })
                    }
                };
                if kind == WordListKind::Lexicon && label == 0 {
                    return Err(IngestError::NeutralLexiconWord {
                        path: path.to_path_buf(),
                        line,
                        word,
                    });
                }
                if !seen.insert(word.clone()) {
                    return Err(IngestError::DuplicateWord {
                        path: path.to_path_buf(),
                        line,
                        word,
                    });
                }
                out.push(LabeledWord { word, label });
            }
            if kind == WordListKind::Lexicon {
                let positive = out.iter().filter(|w| w.label > 0).count();
                let negative = out.len() - positive;
                if positive != negative || positive == 0 {
                    return Err(IngestError::UnbalancedLexicon {
                        path: path.to_path_buf(),
                        positive,
                        negative,
                    });
                }
            }
            Ok(WordList::Labeled(out))
        }
    }
}

pub fn load_word_list(path: impl AsRef<Path>, kind: WordListKind) -> Result<WordList> {
    let path = path.as_ref();
    parse_word_list(path, &read_to_string(path)?, kind)
}

pub fn word_list_to_string(list: &WordList) -> String {
    let mut out = String::new();
    match list {
        WordList::Set(words) => {
            for w in words {
                out.push_str(w);
                out.push('\n');
            }
        }
        WordList::Labeled(entries) => {
            for e in entries {
                let _ = writeln!(out, "{}\t{}", e.word, e.label);
            }
        }
    }
    out
}

pub fn write_word_list(path: impl AsRef<Path>, list: &WordList) -> Result<()> {
    write_string(path.as_ref(), &word_list_to_string(list))
}
