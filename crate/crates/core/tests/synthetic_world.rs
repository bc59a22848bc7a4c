use finsenti::analysis::{align, pearson, pearson_slices};
use finsenti::factor::{adjust, daily_factor, score_articles};
use finsenti::senti::{build_cache, evaluate_labels};
use finsenti::synth::{SynthConfig, SynthWorld};
use finsenti::tokenizer::{Cleaner, Segmenter};

#[test]
fn planted_sentiment_is_recovered() {
    let world = SynthWorld::generate(&SynthConfig::default());
    let built = build_cache(&world.common_words(), &world.embeddings, &world.graph, &world.lexicon, 20, 5).unwrap();
    assert!(built.omitted.is_empty());
    assert!(built.fallback_count > 0);
    let acc = evaluate_labels(&built.cache, &world.labeled_words(), 0.1);
    assert!(acc.accuracy.unwrap() > 0.95, "{acc:?}");

    let seg = Segmenter::new(world.dictionary.clone(), Some(world.hmm.clone()));
    let cleaner = Cleaner::for_scoring(world.stopwords.iter().cloned());
    let scores = score_articles(&world.articles, &seg, &cleaner, &built.cache);
    assert!(scores.iter().all(|s| s.missed_word_count > 0 || s.scored_word_count > 0));
    let standard = daily_factor(&scores);
    let adjusted = adjust(&standard, 7).unwrap();
    assert_eq!(standard.len(), world.sentiment.len());

    let rho_s = pearson_slices(&standard.values(), &world.sentiment_values()).unwrap();
    let rho_std_index = pearson(&align(&standard, &world.market).unwrap()).unwrap();
    let rho_adj_index = pearson(&align(&adjusted, &world.market).unwrap()).unwrap();
    eprintln!("rho(factor, s) = {rho_s}, index: standard {rho_std_index}, adjusted {rho_adj_index}");
    assert!(rho_s >= 0.8);
    assert!(rho_adj_index >= rho_std_index);
}
