//! Hot paths that go through `par`. Benchmark ids do not include the backend,
//! so a sequential run saved as a baseline can be compared directly:
//!
//! ```text
//! cargo bench -p finsenti --no-default-features -- --save-baseline sequential
//! cargo bench -p finsenti -- --baseline sequential
//! ```

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use finsenti::analysis::{align, random_baseline, RandomDist};
use finsenti::embeddings::{corpus_loss, full_batch_gradient, EmbeddingModel, Mode, Vocabulary};
use finsenti::factor::{daily_factor, score_articles};
use finsenti::par;
use finsenti::senti::build_cache;
use finsenti::synth::{SynthConfig, SynthWorld};
use finsenti::tokenizer::{Cleaner, Segmenter};

fn benches(c: &mut Criterion) {
    eprintln!("backend: {}", par::backend());
    let world = SynthWorld::generate(&SynthConfig::default());
    let words = world.common_words();
    let cache = build_cache(&words, &world.embeddings, &world.graph, &world.lexicon, 20, 5)
        .unwrap()
        .cache;
    let seg = Segmenter::new(world.dictionary.clone(), Some(world.hmm.clone()));
    let cleaner = Cleaner::for_scoring(world.stopwords.iter().cloned());
    let scores = score_articles(&world.articles, &seg, &cleaner, &cache);
    let pair = align(&daily_factor(&scores), &world.market).unwrap();

    let sentences: Vec<Vec<String>> = world
        .training_text
        .iter()
        .map(|l| Cleaner::for_training().clean(seg.cut(l)))
        .collect();
    let vocab = Vocabulary::build(&sentences, 1).unwrap();
    let corpus: Vec<Vec<usize>> = sentences.iter().map(|s| vocab.encode(s)).collect();
    let model = EmbeddingModel::with_seed(vocab, 32, Mode::SkipGram, 3);

    let mut g = c.benchmark_group("parallel");
    g.sample_size(20);
    g.bench_function("build_cache", |b| {
        b.iter(|| build_cache(black_box(&words), &world.embeddings, &world.graph, &world.lexicon, 20, 5).unwrap())
    });
    g.bench_function("score_articles", |b| {
        b.iter(|| score_articles(black_box(&world.articles), &seg, &cleaner, &cache))
    });
    g.bench_function("random_baseline_1000", |b| {
        let dist = RandomDist::normal_like(&pair.x);
        b.iter(|| random_baseline(black_box(&pair), dist, 1000, 9).unwrap())
    });
    g.bench_function("corpus_loss", |b| b.iter(|| corpus_loss(black_box(&model), &corpus, 5)));
    g.bench_function("full_batch_gradient", |b| {
        b.iter(|| full_batch_gradient(black_box(&model), &corpus, 5))
    });
    g.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
