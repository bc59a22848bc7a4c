//! Seeded synthetic worlds with a planted daily sentiment signal.
//!
//! A world holds every input the pipeline needs: a segmentation dictionary
//! and HMM, stop words, a balanced lexicon, a constructed embedding whose
//! polarity axis separates positive from negative words, a synset graph with
//! one cluster per polarity, a news corpus whose word choice follows a
//! planted sentiment path `s(t)`, an index driven by a trailing mean of `s`,
//! an unrelated temperature series and a training corpus.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::embeddings::{EmbeddingModel, Mode};
use crate::ingest::{self, IngestError, LabeledWord, MarketSeries, NewsArticle, TemperatureSeries, WordList};
use crate::semgraph::SynsetGraph;
use crate::senti::SentimentLexicon;
use crate::tokenizer::{HmmParams, SegmentationDictionary, Tag};

pub const STOPWORDS: [&str; 10] = ["的", "了", "在", "是", "和", "也", "就", "都", "而", "及"];
const PUNCTUATION: [&str; 3] = ["，", "、", "；"];
const HUBS_PER_POLARITY: usize = 5;
const NEUTRAL_HUBS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub start: NaiveDate,
    pub days: usize,
    pub articles_per_day: usize,
    pub tokens_per_article: usize,
    pub lexicon_per_polarity: usize,
    /// Polar words outside the lexicon; articles mostly use these.
    pub extra_per_polarity: usize,
    pub neutral_words: usize,
    /// Dictionary words with no embedding; they become cache misses.
    pub oov_words: usize,
    pub dim: usize,
    pub training_sentences: usize,
    /// Trailing window of `s` that drives the index.
    pub index_window: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            start: NaiveDate::from_ymd_opt(2015, 1, 5).expect("valid date"),
            days: 200,
            articles_per_day: 4,
            tokens_per_article: 40,
            lexicon_per_polarity: 50,
            extra_per_polarity: 30,
            neutral_words: 60,
            oov_words: 10,
            dim: 16,
            training_sentences: 500,
            index_window: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub config: SynthConfig,
    pub lexicon: SentimentLexicon,
    /// Non-lexicon polar words with their planted polarity.
    pub polar_words: Vec<LabeledWord>,
    pub neutral_words: Vec<String>,
    pub stopwords: Vec<String>,
    pub oov_words: Vec<String>,
    pub dictionary: SegmentationDictionary,
    pub hmm: HmmParams,
    pub embeddings: EmbeddingModel,
    pub graph: SynsetGraph,
    /// Planted `s(t)` for every calendar day.
    pub sentiment: Vec<(NaiveDate, f64)>,
    pub articles: Vec<NewsArticle>,
    pub market: MarketSeries,
    pub temperature: TemperatureSeries,
    /// Unsegmented training sentences, one per entry.
    pub training_text: Vec<String>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite standard deviation")
}

/// Two-character words with no character shared between words or with a
/// stop word, so dictionary segmentation of their concatenations is exact.
fn make_words(count: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let reserved: BTreeSet<char> = STOPWORDS.iter().flat_map(|w| w.chars()).collect();
    let mut pool: Vec<char> = (0x4E00u32..=0x9FA5)
        .filter_map(char::from_u32)
        .filter(|c| !reserved.contains(c))
        .collect();
    pool.shuffle(rng);
    pool.chunks(2).take(count).map(|c| c.iter().collect()).collect()
}

/// Maximum-likelihood BMES model of frequency-weighted dictionary words,
/// with add-one smoothing on emissions.
pub fn estimate_hmm(entries: &[(String, u64)]) -> HmmParams {
    let mut emit: [HashMap<char, f64>; 4] = Default::default();
    let mut trans = [[0.0f64; 4]; 4];
    let chars: BTreeSet<char> = entries.iter().flat_map(|(w, _)| w.chars()).collect();
    let (mut starts_b, mut starts_s) = (0.0, 0.0);
    for (w, f) in entries {
        let f = *f as f64;
        let cs: Vec<char> = w.chars().collect();
        let tags: Vec<Tag> = match cs.len() {
            1 => vec![Tag::S],
            n => std::iter::once(Tag::B)
                .chain(std::iter::repeat_n(Tag::M, n - 2))
                .chain(std::iter::once(Tag::E))
                .collect(),
        };
        if tags[0] == Tag::B {
            starts_b += f;
        } else {
            starts_s += f;
        }
        for (c, t) in cs.iter().zip(&tags) {
            *emit[*t as usize].entry(*c).or_default() += f;
        }
        for p in tags.windows(2) {
            trans[p[0] as usize][p[1] as usize] += f;
        }
    }
    let total = starts_b + starts_s;
    let (p_b, p_s) = (starts_b / total, starts_s / total);
    // a word ends with E or S and the next word starts with B or S
    for end in [Tag::E, Tag::S] {
        trans[end as usize][Tag::B as usize] = p_b;
        trans[end as usize][Tag::S as usize] = p_s;
    }
    let log_norm = |row: [f64; 4]| {
        let sum: f64 = row.iter().sum();
        row.map(|v| if v > 0.0 { (v / sum).ln() } else { f64::NEG_INFINITY })
    };
    let initial = log_norm([p_b, 0.0, 0.0, p_s]);
    let transition = trans.map(|row| {
        if row.iter().sum::<f64>() > 0.0 {
            log_norm(row)
        } else {
            // M never occurs for two-character words; keep it a valid distribution
            log_norm([0.0, 0.5, 0.5, 0.0])
        }
    });
    let emission = emit.map(|counts| {
        let denom: f64 = counts.values().sum::<f64>() + chars.len() as f64;
        chars
            .iter()
            .map(|c| (*c, ((counts.get(c).copied().unwrap_or(0.0) + 1.0) / denom).ln()))
            .collect()
    });
    HmmParams::new(initial, transition, emission).expect("estimated HMM respects BMES structure")
}

fn planted_sentiment(config: &SynthConfig) -> Vec<f64> {
    let mut rng = stream(config.seed, 10);
    let noise = normal(0.12);
    let mut ar = 0.0;
    (0..config.days)
        .map(|t| {
            ar = 0.7 * ar + noise.sample(&mut rng);
            (0.6 * (2.0 * PI * t as f64 / 60.0).sin() + ar).clamp(-0.95, 0.95)
        })
        .collect()
}

/// Trailing mean of the latest `k` values, shorter at the start.
pub fn trailing_mean(values: &[f64], k: usize) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let w = &values[(i + 1).saturating_sub(k)..=i];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

impl SynthWorld {
    pub fn generate(config: &SynthConfig) -> Self {
        let c = config;
        let mut rng = stream(c.seed, 0);
        let n_lex = 2 * c.lexicon_per_polarity;
        let n_extra = 2 * c.extra_per_polarity;
        let mut words = make_words(n_lex + n_extra + c.neutral_words + c.oov_words, &mut rng).into_iter();
        let mut take = |n: usize| words.by_ref().take(n).collect::<Vec<_>>();
        let label = |i: usize| if i % 2 == 0 { 1i8 } else { -1 };
        let lexicon_entries: Vec<LabeledWord> = take(n_lex)
            .into_iter()
            .enumerate()
            .map(|(i, word)| LabeledWord { word, label: label(i) })
            .collect();
        let polar_words: Vec<LabeledWord> = take(n_extra)
            .into_iter()
            .enumerate()
            .map(|(i, word)| LabeledWord { word, label: label(i) })
            .collect();
        let neutral_words = take(c.neutral_words);
        let oov_words = take(c.oov_words);
        let stopwords: Vec<String> = STOPWORDS.iter().map(|s| s.to_string()).collect();

        let mut rng = stream(c.seed, 1);
        let mut dict_entries: Vec<(String, u64)> = Vec::new();
        for w in lexicon_entries.iter().chain(&polar_words) {
            dict_entries.push((w.word.clone(), rng.random_range(50..500)));
        }
        for w in &neutral_words {
            dict_entries.push((w.clone(), rng.random_range(100..800)));
        }
        for w in &oov_words {
            dict_entries.push((w.clone(), rng.random_range(20..100)));
        }
        for w in &stopwords {
            dict_entries.push((w.clone(), 3000));
        }
        let dictionary = SegmentationDictionary::new(dict_entries.clone()).expect("distinct synthetic words");
        let hmm = estimate_hmm(&dict_entries);

        let embeddings = Self::embed(c, &lexicon_entries, &polar_words, &neutral_words, &stopwords);
        let graph = Self::build_graph(c, &lexicon_entries, &polar_words, &neutral_words);

        let s = planted_sentiment(c);
        let dates: Vec<NaiveDate> = (0..c.days).map(|t| c.start + Days::new(t as u64)).collect();
        let positives: Vec<&str> = Self::pick(&lexicon_entries, &polar_words, 1);
        let negatives: Vec<&str> = Self::pick(&lexicon_entries, &polar_words, -1);
        let vocab = Vocab {
            positives: &positives,
            negatives: &negatives,
            neutral: &neutral_words,
            stopwords: &stopwords,
            oov: &oov_words,
        };

        let mut rng = stream(c.seed, 2);
        let mut articles = Vec::new();
        for (t, date) in dates.iter().enumerate() {
            let count = (c.articles_per_day as i64 + rng.random_range(-1..=1)).max(1) as usize;
            for k in 0..count {
                let title_len = rng.random_range(3..=5);
                let body_len = (c.tokens_per_article as i64 + rng.random_range(-8..=8)).max(5) as usize;
                articles.push(NewsArticle {
                    id: format!("{}-{k:02}", date.format("%Y%m%d")),
                    date: *date,
                    title: vocab.sentence(title_len, s[t], &mut rng, false),
                    body: vocab.sentence(body_len, s[t], &mut rng, true),
                });
            }
        }

        let mut rng = stream(c.seed, 3);
        let market_noise = normal(0.002);
        let driven = trailing_mean(&s, c.index_window);
        let market = MarketSeries::new(
            dates
                .iter()
                .zip(&driven)
                .filter(|(d, _)| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
                .map(|(d, m)| (*d, 3000.0 * (1.0 + 0.15 * m + market_noise.sample(&mut rng))))
                .collect(),
        )
        .expect("positive synthetic closes");

        let mut rng = stream(c.seed, 4);
        let temp_noise = normal(2.0);
        let temperature = TemperatureSeries::new(
            dates
                .iter()
                .map(|d| {
                    let doy = d.ordinal() as f64;
                    (*d, 12.0 + 10.0 * (2.0 * PI * (doy - 110.0) / 365.25).sin() + temp_noise.sample(&mut rng))
                })
                .collect(),
        )
        .expect("ordered dates");

        let mut rng = stream(c.seed, 5);
        let training_text = (0..c.training_sentences)
            .map(|_| {
                let polarity = if rng.random_bool(0.5) { 0.9 } else { -0.9 };
                let len = rng.random_range(12..=20);
                vocab.sentence(len, polarity, &mut rng, true)
            })
            .collect();

        Self {
            config: c.clone(),
            lexicon: SentimentLexicon::new(lexicon_entries).expect("balanced by construction"),
            polar_words,
            neutral_words,
            stopwords,
            oov_words,
            dictionary,
            hmm,
            embeddings,
            graph,
            sentiment: dates.into_iter().zip(s).collect(),
            articles,
            market,
            temperature,
            training_text,
        }
    }

    fn pick<'a>(lexicon: &'a [LabeledWord], extra: &'a [LabeledWord], label: i8) -> Vec<&'a str> {
        lexicon
            .iter()
            .chain(extra)
            .filter(|w| w.label == label)
            .map(|w| w.word.as_str())
            .collect()
    }

    fn embed(
        c: &SynthConfig,
        lexicon: &[LabeledWord],
        extra: &[LabeledWord],
        neutral: &[String],
        stopwords: &[String],
    ) -> EmbeddingModel {
        assert!(c.dim >= 3, "the constructed embedding needs at least 3 dimensions");
        let mut rng = stream(c.seed, 6);
        let mut vector = |finance: f64, polarity: f64, polarity_sd: f64, sd: f64| {
            let (p, n) = (normal(polarity_sd), normal(sd));
            let mut v = vec![finance, polarity + p.sample(&mut rng)];
            v.extend((2..c.dim).map(|_| n.sample(&mut rng)));
            v
        };
        let mut rows = Vec::new();
        for w in lexicon.iter().chain(extra) {
            let v = vector(1.0, 0.6 * f64::from(w.label), 0.05, 0.12);
            rows.push((w.word.clone(), v.clone(), v));
        }
        for w in neutral {
            let v = vector(0.8, 0.0, 0.15, 0.3);
            rows.push((w.clone(), v.clone(), v));
        }
        for w in stopwords {
            let v = vector(0.2, 0.0, 0.2, 0.5);
            rows.push((w.clone(), v.clone(), v));
        }
        EmbeddingModel::from_rows(Mode::SkipGram, rows)
    }

    /// Root, one sub-root per polarity, a few hubs under each, and one
    /// synset per word under a hub. About a sixth of extra polar words and
    /// half the neutral words stay unmapped.
    fn build_graph(c: &SynthConfig, lexicon: &[LabeledWord], extra: &[LabeledWord], neutral: &[String]) -> SynsetGraph {
        let mut rng = stream(c.seed, 7);
        let mut g = SynsetGraph::new();
        let add = |g: &mut SynsetGraph, id: &str, parent: Option<&str>| {
            g.add_synset(id).expect("unique synset id");
            if let Some(p) = parent {
                g.add_edge(id, p).expect("parent exists");
            }
        };
        add(&mut g, "root", None);
        for (pol, name) in [(1, "pos"), (-1, "neg")] {
            add(&mut g, name, Some("root"));
            for h in 0..HUBS_PER_POLARITY {
                add(&mut g, &format!("{name}.h{h}"), Some(name));
            }
            let members = lexicon.iter().map(|w| (w, true)).chain(extra.iter().map(|w| (w, false)));
            for (i, (w, in_lexicon)) in members.filter(|(w, _)| w.label == pol).enumerate() {
                if !in_lexicon && rng.random_bool(1.0 / 6.0) {
                    continue;
                }
                let id = format!("{name}.{i:03}");
                add(&mut g, &id, Some(&format!("{name}.h{}", i % HUBS_PER_POLARITY)));
                g.map_word(w.word.clone(), &id).expect("synset exists");
            }
        }
        add(&mut g, "neu", Some("root"));
        for h in 0..NEUTRAL_HUBS {
            add(&mut g, &format!("neu.h{h}"), Some("neu"));
        }
        for (i, w) in neutral.iter().enumerate() {
            if rng.random_bool(0.5) {
                continue;
            }
            let id = format!("neu.{i:03}");
            add(&mut g, &id, Some(&format!("neu.h{}", i % NEUTRAL_HUBS)));
            g.map_word(w.clone(), &id).expect("synset exists");
        }
        g
    }

    /// Lexicon, polar and neutral words: everything with an embedding except
    /// stop words.
    pub fn common_words(&self) -> Vec<String> {
        let set: BTreeSet<String> = self
            .lexicon
            .words()
            .iter()
            .chain(self.polar_words.iter().map(|w| &w.word))
            .chain(&self.neutral_words)
            .cloned()
            .collect();
        set.into_iter().collect()
    }

    /// Polar words with their planted labels plus neutral words labeled 0.
    pub fn labeled_words(&self) -> Vec<LabeledWord> {
        self.polar_words
            .iter()
            .cloned()
            .chain(self.neutral_words.iter().map(|w| LabeledWord {
                word: w.clone(),
                label: 0,
            }))
            .collect()
    }

    pub fn sentiment_values(&self) -> Vec<f64> {
        self.sentiment.iter().map(|p| p.1).collect()
    }

    /// Writes every input file under `dir`.
    pub fn write_fixtures(&self, dir: &Path) -> Result<(), IngestError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| IngestError::Io { path, source }
        };
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(io(&path))
        };
        std::fs::create_dir_all(dir.join("graph")).map_err(io(dir))?;
        write("dictionary.tsv", self.dictionary.to_tsv())?;
        write("hmm.txt", self.hmm.to_text())?;
        write(
            "stopwords.txt",
            ingest::word_list_to_string(&WordList::Set(self.stopwords.iter().cloned().collect())),
        )?;
        write("lexicon.tsv", ingest::word_list_to_string(&WordList::Labeled(self.lexicon.entries())))?;
        write(
            "common_words.txt",
            ingest::word_list_to_string(&WordList::Set(self.common_words().into_iter().collect())),
        )?;
        write("labeled_words.tsv", ingest::word_list_to_string(&WordList::Labeled(self.labeled_words())))?;
        write("embeddings.txt", self.embeddings.to_text())?;
        write("corpus.jsonl", ingest::corpus_to_jsonl(&self.articles))?;
        write("market.csv", ingest::market_to_csv(&self.market))?;
        write("temperature.csv", ingest::temperature_to_csv(&self.temperature))?;
        let mut training = self.training_text.join("\n");
        training.push('\n');
        write("training.txt", training)?;
        let mut truth = String::from("date,sentiment\n");
        for (d, v) in &self.sentiment {
            truth.push_str(&format!("{},{v:?}\n", d.format(ingest::DATE_FORMAT)));
        }
        write("sentiment.csv", truth)?;
        self.graph
            .save_dir(dir.join("graph"))
            .map_err(|e| IngestError::Io {
                path: dir.join("graph"),
                source: std::io::Error::other(e.to_string()),
            })
    }
}

struct Vocab<'a> {
    positives: &'a [&'a str],
    negatives: &'a [&'a str],
    neutral: &'a [String],
    stopwords: &'a [String],
    oov: &'a [String],
}

impl Vocab<'_> {
    /// Draws `len` tokens whose polar words are positive with probability
    /// `(1 + s) / 2`, and joins them into unspaced text.
    fn sentence(&self, len: usize, s: f64, rng: &mut ChaCha8Rng, noisy: bool) -> String {
        let mut out = String::new();
        for _ in 0..len {
            let u: f64 = rng.random();
            let token: String = if u < 0.45 {
                let side = if rng.random_bool((1.0 + s) / 2.0) { self.positives } else { self.negatives };
                side.choose(rng).expect("non-empty").to_string()
            } else if u < 0.70 {
                self.neutral.choose(rng).expect("non-empty").clone()
            } else if u < 0.85 {
                self.stopwords.choose(rng).expect("non-empty").clone()
            } else if !noisy || u < 0.90 {
                self.oov.choose(rng).map_or_else(String::new, Clone::clone)
            } else if u < 0.95 {
                format!("{:.1}", rng.random_range(0.0..100.0))
            } else {
                PUNCTUATION.choose(rng).expect("non-empty").to_string()
            };
            out.push_str(&token);
        }
        if noisy {
            out.push('。');
        }
        out
    }
}
