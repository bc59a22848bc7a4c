//! Stage bodies shared by the single-stage subcommands and `pipeline`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use finsenti::analysis::{self, ChartSeries, RandomDist, ReportRow};
use finsenti::embeddings::{self, EmbeddingModel, TrainConfig};
use finsenti::factor::{self, ArticleScore, DailyFactorSeries, FactorKind};
use finsenti::ingest::{self, MarketSeries, WordListKind};
use finsenti::senti::{self, AccuracyReport, ScoreCache, SentimentLexicon};
use finsenti::tokenizer::{Cleaner, HmmParams, SegmentationDictionary, Segmenter};
use finsenti::SynsetGraph;

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn segmenter(dictionary: &Path, hmm: Option<&Path>) -> Result<Segmenter> {
    let dict = SegmentationDictionary::load(dictionary)?;
    let hmm = hmm.map(HmmParams::load).transpose()?;
    Ok(Segmenter::new(dict, hmm))
}

pub fn scoring_cleaner(stopwords: Option<&Path>) -> Result<Cleaner> {
    let words = match stopwords {
        Some(p) => ingest::load_word_list(p, WordListKind::StopWords)?.into_set(),
        None => Default::default(),
    };
    Ok(Cleaner::for_scoring(words))
}

/// Segmented sentences from a JSONL news corpus (title and body of each
/// article form one sentence) or a plain text file with one per line.
pub fn read_sentences(path: &Path, seg: &Segmenter, cleaner: &Cleaner) -> Result<Vec<(String, Vec<String>)>> {
    let cut = |text: &str| cleaner.clean(seg.cut(text));
    if path.extension().is_some_and(|e| e == "jsonl") {
        Ok(ingest::load_corpus(path)?
            .into_iter()
            .map(|a| {
                let mut tokens = cut(&a.title);
                tokens.extend(cut(&a.body));
                (a.id, tokens)
            })
            .collect())
    } else {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| ((i + 1).to_string(), cut(l)))
            .collect())
    }
}

pub fn tokenize(input: &Path, seg: &Segmenter, cleaner: &Cleaner, out: &Path) -> Result<usize> {
    let sentences = read_sentences(input, seg, cleaner)?;
    let mut text = String::new();
    for (id, tokens) in &sentences {
        let _ = writeln!(text, "{id}\t{}", tokens.join(" "));
    }
    write(out, &text)?;
    Ok(sentences.len())
}

pub struct TrainSummary {
    pub vocab: usize,
    pub losses: Vec<f64>,
}

pub fn train(training: &Path, seg: &Segmenter, config: &TrainConfig, model_out: &Path, loss_out: Option<&Path>) -> Result<TrainSummary> {
    let sentences: Vec<Vec<String>> = read_sentences(training, seg, &Cleaner::for_training())?
        .into_iter()
        .map(|s| s.1)
        .collect();
    let (model, report) = embeddings::train(&sentences, config)?;
    model.save(model_out)?;
    if let Some(p) = loss_out {
        let mut text = String::from("epoch,loss,learning_rate\n");
        for (i, loss) in report.losses.iter().enumerate() {
            let lr = i.checked_sub(1).map_or(String::new(), |e| format!("{:?}", report.learning_rates[e]));
            let _ = writeln!(text, "{i},{loss:?},{lr}");
        }
        write(p, &text)?;
    }
    Ok(TrainSummary {
        vocab: model.len(),
        losses: report.losses,
    })
}

pub struct ScoreWordsSummary {
    pub scored: usize,
    pub fallback: usize,
    pub omitted: usize,
    pub accuracy: Option<AccuracyReport>,
}

pub struct ScoreWordsInputs<'a> {
    pub model: &'a Path,
    pub graph: &'a Path,
    pub lexicon: &'a Path,
    pub words: &'a Path,
    pub labeled: Option<&'a Path>,
}

pub fn score_words(inputs: &ScoreWordsInputs, n: usize, m: usize, threshold: f64, out: &Path) -> Result<ScoreWordsSummary> {
    let model = EmbeddingModel::load(inputs.model)?;
    let graph = SynsetGraph::load_dir(inputs.graph)?;
    let lexicon = SentimentLexicon::load(inputs.lexicon)?;
    let words: Vec<String> = ingest::load_word_list(inputs.words, WordListKind::CommonWords)?
        .into_set()
        .into_iter()
        .collect();
    let built = senti::build_cache(&words, &model, &graph, &lexicon, n, m)?;
    built.cache.save(out)?;
    let accuracy = match inputs.labeled {
        Some(p) => {
            let labeled = ingest::load_word_list(p, WordListKind::Labeled)?.into_labeled();
            Some(senti::evaluate_labels(&built.cache, &labeled, threshold))
        }
        None => None,
    };
    Ok(ScoreWordsSummary {
        scored: built.cache.len(),
        fallback: built.fallback_count,
        omitted: built.omitted.len(),
        accuracy,
    })
}

pub fn accuracy_json(r: &AccuracyReport, threshold: f64) -> String {
    let v = serde_json::json!({
        "threshold": threshold,
        "evaluated": r.evaluated,
        "correct": r.correct,
        "accuracy": r.accuracy,
        "excluded_indeterminate": r.excluded_indeterminate,
        "excluded_below_threshold": r.excluded_below_threshold,
        "excluded_missing": r.excluded_missing,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("json");
    s.push('\n');
    s
}

pub fn score_articles(corpus: &Path, cache: &Path, seg: &Segmenter, cleaner: &Cleaner) -> Result<Vec<ArticleScore>> {
    let articles = ingest::load_corpus(corpus)?;
    let cache = ScoreCache::load(cache)?;
    Ok(factor::score_articles(&articles, seg, cleaner, &cache))
}

pub fn factors(scores: &[ArticleScore], window: usize) -> Result<(DailyFactorSeries, DailyFactorSeries)> {
    let standard = factor::daily_factor(scores);
    let adjusted = factor::adjust(&standard, window)?;
    Ok((standard, adjusted))
}

/// Adjusted series when present, else the first one.
fn headline(series: &[DailyFactorSeries]) -> Result<&DailyFactorSeries> {
    series
        .iter()
        .find(|s| matches!(s.kind, FactorKind::Adjusted { .. }))
        .or(series.first())
        .context("factor file holds no series")
}

fn kind_label(kind: FactorKind) -> String {
    match kind {
        FactorKind::Standard => "standard".into(),
        FactorKind::Adjusted { window } => format!("adjusted_{window}"),
    }
}

pub fn analyze(factor_path: &Path, market: &MarketSeries, returns: bool) -> Result<Vec<ReportRow>> {
    let series = factor::load_factors(factor_path)?;
    anyhow::ensure!(!series.is_empty(), "{} holds no factor series", factor_path.display());
    let mut rows = Vec::new();
    for s in &series {
        let pair = analysis::align(s, market)?;
        rows.push(ReportRow::from_report(kind_label(s.kind), "index", &analysis::ols(&pair)?));
        if returns {
            let diff = analysis::differenced(&pair)?;
            rows.push(ReportRow::from_report(kind_label(s.kind), "index_returns", &analysis::ols(&diff)?));
        }
    }
    Ok(rows)
}

pub struct BaselineRequest<'a> {
    pub random: bool,
    pub temperature: Option<&'a Path>,
    pub trials: usize,
    pub seed: u64,
}

/// Random rows use the standard factor's range and moments on its aligned
/// dates.
pub fn baselines(factor_path: &Path, market: &MarketSeries, req: &BaselineRequest) -> Result<Vec<ReportRow>> {
    let series = factor::load_factors(factor_path)?;
    let standard = series
        .iter()
        .find(|s| s.kind == FactorKind::Standard)
        .or(series.first())
        .context("factor file holds no series")?;
    let pair = analysis::align(standard, market)?;
    let mut rows = Vec::new();
    if req.random {
        for dist in [RandomDist::uniform_like(&pair.x), RandomDist::normal_like(&pair.x)] {
            let r = analysis::random_baseline(&pair, dist, req.trials, req.seed)?;
            rows.push(ReportRow {
                factor_kind: dist.name().into(),
                target: "index".into(),
                rho: r.mean_rho,
                regression: None,
                n: r.n,
            });
        }
    }
    if let Some(p) = req.temperature {
        let temp = ingest::load_temperature_csv(p)?;
        rows.push(ReportRow::from_report(
            "temperature",
            "index",
            &analysis::temperature_baseline(&temp, market)?,
        ));
    }
    Ok(rows)
}

pub fn plot(factor_path: &Path, market: &MarketSeries, out: &Path) -> Result<()> {
    let series = factor::load_factors(factor_path)?;
    let main = headline(&series)?;
    let label = match main.kind {
        FactorKind::Standard => "daily sentiment factor".to_string(),
        FactorKind::Adjusted { window } => format!("{window}-day average sentiment factor"),
    };
    let chart = [
        ChartSeries::new(label, analysis::Axis::Left, main.pairs()),
        ChartSeries::new("index close", analysis::Axis::Right, market.points().to_vec()),
    ];
    analysis::plot_chart("Sentiment factor and index", &chart, out)?;
    Ok(())
}
