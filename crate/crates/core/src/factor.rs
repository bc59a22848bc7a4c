//! Article scores, daily factors and the trailing-mean adjustment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::ingest::{NewsArticle, DATE_FORMAT};
use crate::par;
use crate::senti::ScoreCache;
use crate::tokenizer::{Cleaner, Segmenter};

/// Default trailing window for the adjusted factor.
pub const DEFAULT_WINDOW: usize = 7;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("adjustment window must be at least 1")]
    ZeroWindow,
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArticleScore {
    pub id: String,
    pub date: NaiveDate,
    pub score: f64,
    pub scored_word_count: usize,
    pub missed_word_count: usize,
    /// No cleaned token was found in the cache; the score is 0.
    pub degenerate: bool,
}

fn mean_within_range(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n, mut lo, mut hi) = (0.0, 0usize, f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        sum += v;
        n += 1;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    // rounding in the sum can push a mean of equal values off by an ulp
    (n > 0).then(|| (sum / n as f64).clamp(lo, hi))
}

/// Scores one article against the cache. Title and body are segmented
/// separately so no word spans the boundary between them.
pub fn article_score(
    article: &NewsArticle,
    segmenter: &Segmenter,
    cleaner: &Cleaner,
    cache: &ScoreCache,
) -> ArticleScore {
    let mut tokens = segmenter.cut(&article.title);
    tokens.extend(segmenter.cut(&article.body));
    let tokens = cleaner.clean(tokens);
    let found: Vec<f64> = tokens.iter().filter_map(|t| cache.get(t).map(|s| s.value)).collect();
    let missed = tokens.len() - found.len();
    let mean = mean_within_range(found.iter().copied());
    ArticleScore {
        id: article.id.clone(),
        date: article.date,
        score: mean.unwrap_or(0.0),
        scored_word_count: found.len(),
        missed_word_count: missed,
        degenerate: mean.is_none(),
    }
}

/// Scores every article, in parallel when enabled. Output follows input order.
pub fn score_articles(
    articles: &[NewsArticle],
    segmenter: &Segmenter,
    cleaner: &Cleaner,
    cache: &ScoreCache,
) -> Vec<ArticleScore> {
    par::map_slice(articles, |a| article_score(a, segmenter, cleaner, cache))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Standard,
    Adjusted { window: usize },
}

impl FactorKind {
    pub fn name(&self) -> &'static str {
        match self {
            FactorKind::Standard => "standard",
            FactorKind::Adjusted { .. } => "adjusted",
        }
    }

    /// 1 for the standard factor.
    pub fn window(&self) -> usize {
        match *self {
            FactorKind::Standard => 1,
            FactorKind::Adjusted { window } => window,
        }
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorKind::Standard => f.write_str("standard"),
            FactorKind::Adjusted { window } => write!(f, "adjusted{window}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorPoint {
    pub date: NaiveDate,
    pub value: f64,
    /// Articles behind the value; summed over the window when adjusted.
    pub n_articles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyFactorSeries {
    pub kind: FactorKind,
    points: Vec<FactorPoint>,
}

impl DailyFactorSeries {
    /// Panics if dates are not strictly increasing or a value is not finite.
    pub fn new(kind: FactorKind, points: Vec<FactorPoint>) -> Self {
        assert!(points.windows(2).all(|w| w[0].date < w[1].date), "dates must increase");
        assert!(points.iter().all(|p| p.value.is_finite()), "values must be finite");
        Self { kind, points }
    }

    pub fn points(&self) -> &[FactorPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.date).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn pairs(&self) -> Vec<(NaiveDate, f64)> {
        self.points.iter().map(|p| (p.date, p.value)).collect()
    }
}

/// Per-date mean of article scores. Dates without articles are absent.
pub fn daily_factor(scores: &[ArticleScore]) -> DailyFactorSeries {
    let mut by_date: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for s in scores {
        by_date.entry(s.date).or_default().push(s.score);
    }
    let points = by_date
        .into_iter()
        .map(|(date, v)| FactorPoint {
            date,
            value: mean_within_range(v.iter().copied()).expect("non-empty group"),
            n_articles: v.len(),
        })
        .collect();
    DailyFactorSeries::new(FactorKind::Standard, points)
}

/// Trailing mean over the latest `k` present entries, shorter at the start.
pub fn adjust(series: &DailyFactorSeries, k: usize) -> Result<DailyFactorSeries, FactorError> {
    if k == 0 {
        return Err(FactorError::ZeroWindow);
    }
    let pts = series.points();
    let points = (0..pts.len())
        .map(|i| {
            let win = &pts[(i + 1).saturating_sub(k)..=i];
            FactorPoint {
                date: pts[i].date,
                value: mean_within_range(win.iter().map(|p| p.value)).expect("non-empty window"),
                n_articles: win.iter().map(|p| p.n_articles).sum(),
            }
        })
        .collect();
    Ok(DailyFactorSeries::new(FactorKind::Adjusted { window: k }, points))
}

#[derive(Debug, Deserialize)]
struct FactorRow {
    date: String,
    value: f64,
    kind: String,
    window: usize,
    n_articles: usize,
}

/// CSV `date,value,kind,window,n_articles`; several series share one file.
pub fn factors_to_csv(series: &[&DailyFactorSeries]) -> String {
    let mut out = String::from("date,value,kind,window,n_articles\n");
    for s in series {
        for p in s.points() {
            out.push_str(&format!(
                "{},{:?},{},{},{}\n",
                p.date.format(DATE_FORMAT),
                p.value,
                s.kind.name(),
                s.kind.window(),
                p.n_articles
            ));
        }
    }
    out
}

pub fn write_factors(path: impl AsRef<Path>, series: &[&DailyFactorSeries]) -> Result<(), FactorError> {
    let path = path.as_ref();
    std::fs::write(path, factors_to_csv(series)).map_err(|source| FactorError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a factor CSV back into series, in order of first appearance.
pub fn parse_factors(path: &Path, text: &str) -> Result<Vec<DailyFactorSeries>, FactorError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut groups: Vec<(FactorKind, Vec<FactorPoint>)> = Vec::new();
    for (i, row) in reader.deserialize::<FactorRow>().enumerate() {
        let line = i + 2;
        let bad = |message: String| FactorError::Malformed {
            path: path.to_path_buf(),
            line,
            message,
        };
        let row = row.map_err(|source| FactorError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let date = NaiveDate::parse_from_str(&row.date, DATE_FORMAT)
            .map_err(|_| bad(format!("invalid date {:?}", row.date)))?;
        let kind = match (row.kind.as_str(), row.window) {
            ("standard", 1) => FactorKind::Standard,
            ("adjusted", w) if w >= 1 => FactorKind::Adjusted { window: w },
            (k, w) => return Err(bad(format!("unknown kind {k:?} with window {w}"))),
        };
        if !row.value.is_finite() {
            return Err(bad("value is not finite".into()));
        }
        let point = FactorPoint {
            date,
            value: row.value,
            n_articles: row.n_articles,
        };
        match groups.iter_mut().find(|(k, _)| *k == kind) {
            Some((_, pts)) => {
                if pts.last().is_some_and(|p| p.date >= date) {
                    return Err(bad(format!("date {date} out of order")));
                }
                pts.push(point);
            }
            None => groups.push((kind, vec![point])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(kind, points)| DailyFactorSeries::new(kind, points))
        .collect())
}

pub fn load_factors(path: impl AsRef<Path>) -> Result<Vec<DailyFactorSeries>, FactorError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FactorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_factors(path, &text)
}

/// CSV `id,date,score,scored_word_count,missed_word_count,degenerate`.
pub fn article_scores_to_csv(scores: &[ArticleScore]) -> String {
    let mut out = String::from("id,date,score,scored_word_count,missed_word_count,degenerate\n");
    for s in scores {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record([
            s.id.as_str(),
            &s.date.format(DATE_FORMAT).to_string(),
            &format!("{:?}", s.score),
            &s.scored_word_count.to_string(),
            &s.missed_word_count.to_string(),
            if s.degenerate { "true" } else { "false" },
        ])
        .expect("writing to memory");
        out.push_str(std::str::from_utf8(&w.into_inner().expect("flush")).expect("utf-8"));
    }
    out
}

pub fn parse_article_scores(path: &Path, text: &str) -> Result<Vec<ArticleScore>, FactorError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|source| FactorError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = || FactorError::Malformed {
            path: path.to_path_buf(),
            line: i + 2,
            message: "expected id,date,score,scored_word_count,missed_word_count,degenerate".into(),
        };
        if rec.len() != 6 {
            return Err(bad());
        }
        out.push(ArticleScore {
            id: rec[0].to_string(),
            date: NaiveDate::parse_from_str(&rec[1], DATE_FORMAT).map_err(|_| bad())?,
            score: rec[2].parse().map_err(|_| bad())?,
            scored_word_count: rec[3].parse().map_err(|_| bad())?,
            missed_word_count: rec[4].parse().map_err(|_| bad())?,
            degenerate: rec[5].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

pub fn load_article_scores(path: impl AsRef<Path>) -> Result<Vec<ArticleScore>, FactorError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FactorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_article_scores(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::senti::{Provenance, SentiScore};
    use crate::tokenizer::SegmentationDictionary;
    use proptest::prelude::*;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2015, 6, day).unwrap()
    }

    fn scored(date: NaiveDate, score: f64) -> ArticleScore {
        ArticleScore {
            id: format!("{date}-{score}"),
            date,
            score,
            scored_word_count: 1,
            missed_word_count: 0,
            degenerate: false,
        }
    }

    fn series(values: &[f64]) -> DailyFactorSeries {
        DailyFactorSeries::new(
            FactorKind::Standard,
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| FactorPoint {
                    date: d(i as u32 + 1),
                    value: v,
                    n_articles: 1,
                })
                .collect(),
        )
    }

    fn setup() -> (Segmenter, Cleaner, ScoreCache) {
        let dict =
            SegmentationDictionary::new([("上涨", 10), ("下跌", 10), ("利好", 10), ("股市", 10), ("的", 50)]).unwrap();
        let cache = ScoreCache::from_scores(
            [("上涨", 1.0), ("利好", 1.0), ("下跌", -1.0)]
                .into_iter()
                .map(|(w, v)| (w.to_string(), SentiScore { value: v, provenance: Provenance::Full }))
                .collect(),
        );
        (Segmenter::new(dict, None), Cleaner::for_scoring(["的".to_string()]), cache)
    }

    fn article(title: &str, body: &str) -> NewsArticle {
        NewsArticle {
            id: "a".into(),
            date: d(1),
            title: title.into(),
            body: body.into(),
        }
    }

    #[test]
    fn article_scores() {
        let (seg, cl, cache) = setup();
        let s = article_score(&article("上涨", "利好的上涨。"), &seg, &cl, &cache);
        assert_eq!((s.score, s.scored_word_count, s.degenerate), (1.0, 3, false));
        let s = article_score(&article("上涨", "下跌"), &seg, &cl, &cache);
        assert_eq!(s.score, 0.0);
        let s = article_score(&article("股市", "的 2015"), &seg, &cl, &cache);
        assert_eq!((s.score, s.missed_word_count, s.degenerate), (0.0, 1, true));
    }

    #[test]
    fn ten_cached_one_missing() {
        let (seg, cl, cache) = setup();
        // 7 positive + 3 negative cached words and one uncached word
        let body = "上涨利好上涨利好上涨利好上涨下跌下跌下跌股市";
        let s = article_score(&article("", body), &seg, &cl, &cache);
        assert_eq!((s.scored_word_count, s.missed_word_count), (10, 1));
        assert!((s.score - 0.4).abs() < 1e-15);
    }

    #[test]
    fn daily_means() {
        let f = daily_factor(&[scored(d(2), 0.4), scored(d(1), -0.5), scored(d(2), 0.2)]);
        assert_eq!(f.dates(), vec![d(1), d(2)]);
        assert_eq!(f.values()[0], -0.5);
        assert!((f.values()[1] - 0.3).abs() < 1e-15);
        assert_eq!(f.points()[1].n_articles, 2);
    }

    #[test]
    fn trailing_mean() {
        let a = adjust(&series(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(a.values(), vec![1.0, 1.5, 2.5, 3.5]);
        assert_eq!(a.kind, FactorKind::Adjusted { window: 2 });
        assert_eq!(a.points()[3].n_articles, 2);
        let s = series(&[0.3, -0.1, 0.7]);
        assert_eq!(adjust(&s, 1).unwrap().values(), s.values());
        assert!(matches!(adjust(&s, 0), Err(FactorError::ZeroWindow)));
    }

    #[test]
    fn csv_round_trip() {
        let s = series(&[0.1, -0.25, 1.0 / 3.0]);
        let a = adjust(&s, 7).unwrap();
        let text = factors_to_csv(&[&s, &a]);
        assert!(text.starts_with("date,value,kind,window,n_articles\n2015-06-01,0.1,standard,1,1\n"));
        let back = parse_factors(Path::new("f.csv"), &text).unwrap();
        assert_eq!(back, vec![s, a]);
        let scores = vec![scored(d(1), 0.5), scored(d(3), -1.0 / 7.0)];
        let back = parse_article_scores(Path::new("a.csv"), &article_scores_to_csv(&scores)).unwrap();
        assert_eq!(back, scores);
    }

    fn sample_var(v: &[f64]) -> f64 {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
    }

    #[test]
    fn smoothing_reduces_variance() {
        let v: Vec<f64> = (0..28).map(|i| if i % 2 == 0 { 0.6 } else { -0.4 } + 0.01 * i as f64).collect();
        let s = series(&v);
        assert!(sample_var(&adjust(&s, 7).unwrap().values()) < sample_var(&v));
    }

    proptest! {
        #[test]
        fn factors_stay_within_article_range(
            raw in prop::collection::vec((1u32..20, -1.0f64..1.0), 1..60),
            k in 1usize..10,
        ) {
            let scores: Vec<ArticleScore> = raw.iter().map(|&(day, v)| scored(d(day), v)).collect();
            let lo = raw.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            let hi = raw.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
            let f = daily_factor(&scores);
            let a = adjust(&f, k).unwrap();
            for v in f.values().into_iter().chain(a.values()) {
                prop_assert!(lo <= v && v <= hi);
            }
        }

        #[test]
        fn adjust_commutes_with_affine_maps(
            v in prop::collection::vec(-1.0f64..1.0, 1..28),
            a in -3.0f64..3.0,
            b in -2.0f64..2.0,
            k in 1usize..10,
        ) {
            let x = series(&v);
            let y = series(&v.iter().map(|x| a * x + b).collect::<Vec<_>>());
            let ax = adjust(&x, k).unwrap().values();
            let ay = adjust(&y, k).unwrap().values();
            for (p, q) in ax.iter().zip(&ay) {
                prop_assert!((a * p + b - q).abs() <= 1e-12, "{} vs {}", a * p + b, q);
            }
        }

        #[test]
        fn constant_series_unchanged(c in -1.0f64..1.0, len in 1usize..30, k in 1usize..10) {
            let s = series(&vec![c; len]);
            prop_assert_eq!(adjust(&s, k).unwrap().values(), vec![c; len]);
        }
    }
}
