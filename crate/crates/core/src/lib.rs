//! Sentiment factors for Chinese financial news.
//!
//! The pipeline segments dated news into words, scores each word against a
//! balanced ±1 sentiment lexicon by combining embedding cosines with synset
//! graph path similarities, averages word scores into article and daily
//! factors, smooths them with a trailing window and correlates the result
//! with a market index.
//!
//! Data-parallel stages (cache building, article scoring, full-batch
//! gradients, baseline trials) run on rayon when the `parallel` feature is
//! enabled and fall back to plain iterators otherwise. Both paths produce
//! bitwise-identical output.

pub mod analysis;
pub mod embeddings;
pub mod factor;
pub mod ingest;
pub mod par;
pub mod semgraph;
pub mod senti;
pub mod synth;
pub mod tokenizer;

pub use analysis::{AlignedPair, CorrelationReport};
pub use embeddings::{EmbeddingModel, TrainConfig, Vocabulary};
pub use factor::{ArticleScore, DailyFactorSeries};
pub use ingest::{MarketSeries, NewsArticle, TemperatureSeries};
pub use semgraph::SynsetGraph;
pub use senti::{ScoreCache, SentiScore, SentimentLexicon, SimilarityVector};
pub use tokenizer::{HmmParams, SegmentationDictionary};
