//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;

use finsenti::analysis::dist::t_two_sided_p;
use finsenti::analysis::{align, ols, ols_slices, pearson, pearson_slices, random_baseline, RandomDist};
use finsenti::embeddings::{self, BatchMode, LrSchedule, Mode, TrainConfig};
use finsenti::factor::{adjust, daily_factor, score_articles};
use finsenti::ingest::LabeledWord;
use finsenti::senti::{build_cache, score_word, select, senti_score, SentimentLexicon};
use finsenti::synth::{SynthConfig, SynthWorld};
use finsenti::tokenizer::{
    best_path_scored, build_dag, path_log_prob, viterbi_bmes, Cleaner, HmmParams, SegmentationDictionary, Segmenter,
};
use finsenti::{EmbeddingModel, SynsetGraph};

use support::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn ac1_gradients() -> Check {
    let mut r = rng(101);
    let (mut sg, mut cb, mut full) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..5 {
        let model = random_model(&mut r, 20, 8, Mode::SkipGram, 0.8);
        let pairs: Vec<(usize, usize)> = (0..20).map(|c| (c, r.random_range(0..20))).collect();
        sg = sg.max(skipgram_grad_error(&model, &pairs));

        let model = random_model(&mut r, 20, 8, Mode::Cbow, 0.8);
        let cases: Vec<(usize, Vec<usize>)> = (0..20)
            .map(|c| {
                let k = r.random_range(1..=6);
                (c, random_distinct(&mut r, 20, k))
            })
            .collect();
        cb = cb.max(cbow_grad_error(&model, &cases));
    }
    for mode in [Mode::SkipGram, Mode::Cbow] {
        let model = random_model(&mut r, 20, 8, mode, 0.8);
        let corpus: Vec<Vec<usize>> = (0..6)
            .map(|_| (0..r.random_range(4..12)).map(|_| r.random_range(0..20)).collect())
            .collect();
        full = full.max(corpus_grad_error(&model, &corpus, 2));
    }
    let detail = format!("max rel err skip-gram {sg:.2e}, cbow {cb:.2e}, full-batch {full:.2e}");
    ensure(sg < 1e-4 && cb < 1e-4 && full < 1e-4, || detail.clone())?;
    Ok(detail)
}

fn ac2_softmax() -> Check {
    let mut r = rng(102);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let scale = [0.05, 0.5, 1.5, 3.0][i % 4];
        let mode = if i % 2 == 0 { Mode::SkipGram } else { Mode::Cbow };
        let model = random_model(&mut r, 20, 8, mode, scale);
        worst = worst.max(softmax_sum_error(&model, &mut r));
    }
    let detail = format!("max |sum - 1| = {worst:.2e} over 100 models");
    ensure(worst <= 1e-12, || detail.clone())?;
    Ok(detail)
}

fn training_sentences() -> Result<Vec<Vec<String>>, String> {
    let dir = fixtures();
    let dict = SegmentationDictionary::load(dir.join("dictionary.tsv")).map_err(|e| e.to_string())?;
    let hmm = HmmParams::load(dir.join("hmm.txt")).map_err(|e| e.to_string())?;
    let seg = Segmenter::new(dict, Some(hmm));
    let cleaner = Cleaner::for_training();
    let text = std::fs::read_to_string(dir.join("training.txt")).map_err(|e| e.to_string())?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| cleaner.clean(seg.cut(l)))
        .collect())
}

fn ac3_training() -> Check {
    let sentences = training_sentences()?;
    ensure(sentences.len() == 500, || format!("fixture has {} sentences", sentences.len()))?;
    let mut details = Vec::new();
    for mode in [Mode::SkipGram, Mode::Cbow] {
        let cfg = TrainConfig {
            mode,
            dim: 16,
            window: 3,
            epochs: 10,
            learning_rate: 0.05,
            schedule: LrSchedule::Constant,
            min_count: 2,
            subsequence_len: 0,
            seed: 17,
            batch: BatchMode::FullBatch,
            track_loss: true,
        };
        let (_, report) = embeddings::train(&sentences, &cfg).map_err(|e| e.to_string())?;
        let l = &report.losses;
        ensure(l.len() == 11, || format!("{mode}: {} losses recorded", l.len()))?;
        ensure(l.windows(2).all(|w| w[1] < w[0]), || format!("{mode}: losses not strictly decreasing: {l:?}"))?;
        details.push(format!("{mode} {:.6} -> {:.6} (drop {:.2e})", l[0], l[10], l[0] - l[10]));
    }
    Ok(details.join(", "))
}

fn ac4_tokenizer() -> Check {
    let mut r = rng(104);
    let mut sentences_checked = 0;
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let dict = random_dictionary(&mut r, 20);
        let mut sentences = all_sentences(1..=8);
        sentences.extend((0..4000).map(|i| random_sentence(&mut r, 9 + i % 2)));
        for s in &sentences {
            let (segments, lp) = best_path_scored(s, &build_dag(s, &dict), &dict);
            let oracle = exhaustive_segmentation(s, &dict);
            worst = worst.max((lp - oracle).abs());
            ensure(segments.last().map(|x| x.1) == Some(s.len()), || format!("{s:?}: path does not tile"))?;
        }
        sentences_checked += sentences.len();
    }
    ensure(worst <= 1e-12, || format!("best_path off by {worst:e}"))?;

    let mut spans_checked = 0;
    let mut vworst = 0.0f64;
    for _ in 0..5 {
        let hmm = random_hmm(&mut r);
        let mut spans = all_sentences(1..=4);
        spans.extend((5..=8).flat_map(|len| (0..30).map(move |_| len)).map(|len| random_sentence(&mut r, len)));
        for span in &spans {
            let tags = viterbi_bmes(span, &hmm);
            ensure(tagging_is_well_formed(&tags), || format!("{span:?}: ill-formed {tags:?}"))?;
            vworst = vworst.max((path_log_prob(span, &tags, &hmm) - brute_force_bmes(span, &hmm)).abs());
        }
        spans_checked += spans.len();
    }
    ensure(vworst <= 1e-12, || format!("viterbi off by {vworst:e}"))?;
    Ok(format!(
        "{sentences_checked} sentences (max diff {worst:.1e}), {spans_checked} BMES spans (max diff {vworst:.1e})"
    ))
}

fn ac5_paths() -> Check {
    let mut g = SynsetGraph::new();
    for id in ["a", "b", "c", "island"] {
        g.add_synset(id).map_err(|e| e.to_string())?;
    }
    g.add_edge("a", "b").map_err(|e| e.to_string())?;
    g.add_edge("b", "c").map_err(|e| e.to_string())?;
    let sim = |x: &str, y: &str| g.path_similarity(x, y).unwrap();
    ensure(sim("a", "a") == 1.0, || "self similarity".into())?;
    ensure(sim("a", "island") == 0.0, || "disconnected similarity".into())?;
    ensure(sim("a", "b") == 0.5, || "adjacent similarity".into())?;
    ensure(sim("a", "c") == 1.0 / 3.0, || "two-hop similarity".into())?;

    let mut r = rng(105);
    let mut pairs = 0;
    for i in 0..20 {
        let p = [0.01, 0.02, 0.04, 0.08, 0.2][i % 5];
        let (g, edges) = random_graph(&mut r, 50, p);
        let fw = floyd_warshall(50, &edges);
        for a in 0..50 {
            for b in 0..50 {
                let got = g.shortest_path_len(&node(a), &node(b)).map_err(|e| e.to_string())?;
                ensure(got == fw[a][b], || format!("graph {i}: d({a},{b}) {got:?} vs {:?}", fw[a][b]))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("edge cases exact, {pairs} BFS distances equal Floyd-Warshall"))
}

fn self_scores(model: &EmbeddingModel, graph: &SynsetGraph, lexicon: &SentimentLexicon) -> Result<usize, String> {
    let mut checked = 0;
    for (w, &label) in lexicon.words().iter().zip(lexicon.labels()) {
        if model.vector(w).is_none() {
            continue;
        }
        let s = score_word(w, model, graph, lexicon, 20, 1).map_err(|e| e.to_string())?;
        ensure(s.value == f64::from(label), || format!("{w} scores {} not {label}", s.value))?;
        checked += 1;
    }
    Ok(checked)
}

fn ac6_senti() -> Check {
    let world = SynthWorld::generate(&SynthConfig::default());
    let mut embedded = self_scores(&world.embeddings, &world.graph, &world.lexicon)?;

    // random embedding, no graph: cosine-only fallback
    let mut r = rng(106);
    let base = random_model(&mut r, 40, 8, Mode::SkipGram, 1.0);
    let lexicon = SentimentLexicon::new(
        base.vocab()
            .words()
            .iter()
            .take(30)
            .enumerate()
            .map(|(i, w)| LabeledWord {
                word: w.clone(),
                label: if i % 2 == 0 { 1 } else { -1 },
            })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    embedded += self_scores(&base, &SynsetGraph::new(), &lexicon)?;

    let labels: Vec<i8> = (0..30).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    let lex = SentimentLexicon::new(
        labels
            .iter()
            .enumerate()
            .map(|(i, &label)| LabeledWord {
                word: format!("L{i:02}"),
                label,
            })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    for i in 0..10_000 {
        let v = random_similarity_vector(&mut r, 30);
        let n = r.random_range(1..=30);
        let m = r.random_range(1..=n);
        let sel = select(&v, n, m).map_err(|e| e.to_string())?;
        ensure(sel == brute_force_select(&v, n, m), || format!("vector {i}: selection differs"))?;
        let s = senti_score(&v, &lex, n, m).map_err(|e| e.to_string())?;
        ensure(s.value.abs() <= 1.0, || format!("vector {i}: |score| = {}", s.value.abs()))?;
        ensure(s.value == brute_force_score(&v, &labels, n, m), || format!("vector {i}: score differs"))?;
    }
    Ok(format!("{embedded} lexicon words self-score, 10000 random vectors bounded and match the oracle"))
}

struct EndToEnd {
    world: SynthWorld,
    standard: finsenti::DailyFactorSeries,
    adjusted: finsenti::DailyFactorSeries,
}

fn end_to_end() -> Result<EndToEnd, String> {
    let world = SynthWorld::generate(&SynthConfig::default());
    let built = build_cache(&world.common_words(), &world.embeddings, &world.graph, &world.lexicon, 20, 5)
        .map_err(|e| e.to_string())?;
    let seg = Segmenter::new(world.dictionary.clone(), Some(world.hmm.clone()));
    let cleaner = Cleaner::for_scoring(world.stopwords.iter().cloned());
    let scores = score_articles(&world.articles, &seg, &cleaner, &built.cache);
    let standard = daily_factor(&scores);
    let adjusted = adjust(&standard, 7).map_err(|e| e.to_string())?;
    Ok(EndToEnd {
        world,
        standard,
        adjusted,
    })
}

fn ac7_synthetic(e: &EndToEnd) -> Check {
    ensure(e.world.sentiment.len() == 200, || "world is not 200 days".into())?;
    let s: Vec<_> = e.world.sentiment.clone();
    let rho_s = pearson(
        &finsenti::analysis::align_points(&e.standard.pairs(), &s).map_err(|err| err.to_string())?,
    )
    .map_err(|err| err.to_string())?;
    let std_idx = pearson(&align(&e.standard, &e.world.market).map_err(|err| err.to_string())?)
        .map_err(|err| err.to_string())?;
    let adj_idx = pearson(&align(&e.adjusted, &e.world.market).map_err(|err| err.to_string())?)
        .map_err(|err| err.to_string())?;
    let detail = format!("rho(factor, s) = {rho_s:.4}; vs index: standard {std_idx:.4}, adjusted(7) {adj_idx:.4}");
    ensure(rho_s >= 0.8 && adj_idx >= std_idx, || detail.clone())?;
    Ok(detail)
}

fn ac8_baselines(e: &EndToEnd) -> Check {
    let pair = align(&e.standard, &e.world.market).map_err(|err| err.to_string())?;
    let mut parts = Vec::new();
    for dist in [RandomDist::uniform_like(&pair.x), RandomDist::normal_like(&pair.x)] {
        let a = random_baseline(&pair, dist, 1000, 2024).map_err(|err| err.to_string())?;
        let b = random_baseline(&pair, dist, 1000, 2024).map_err(|err| err.to_string())?;
        ensure(a == b, || format!("{}: not deterministic", dist.name()))?;
        ensure(a.trials == 1000, || format!("{}: {} trials", dist.name(), a.trials))?;
        ensure(a.mean_rho.abs() < 0.05, || format!("{}: mean rho {}", dist.name(), a.mean_rho))?;
        parts.push(format!("{} mean rho {:+.4}", dist.name(), a.mean_rho));
    }
    Ok(parts.join(", "))
}

fn ac9_statistics(e: &EndToEnd) -> Check {
    let rho = pearson_slices(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).map_err(|err| err.to_string())?;
    ensure((rho - 0.8).abs() <= 1e-12, || format!("pearson gave {rho:?}"))?;

    let mut r = rng(109);
    let mut worst_r2 = 0.0f64;
    for _ in 0..500 {
        let n = r.random_range(3..100);
        let slope = r.random_range(-2.0..2.0);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + r.random_range(-5.0..5.0)).collect();
        let rep = ols_slices(&x, &y).map_err(|err| err.to_string())?;
        worst_r2 = worst_r2.max((rep.rho * rep.rho - rep.r_squared).abs());
    }
    for series in [&e.standard, &e.adjusted] {
        let rep = ols(&align(series, &e.world.market).map_err(|err| err.to_string())?).map_err(|err| err.to_string())?;
        worst_r2 = worst_r2.max((rep.rho * rep.rho - rep.r_squared).abs());
    }
    ensure(worst_r2 <= 1e-10, || format!("rho^2 vs R^2 off by {worst_r2:e}"))?;

    let mut worst_p = 0.0f64;
    for (t, df, p) in T_TABLE {
        worst_p = worst_p.max((t_two_sided_p(t, df) - p).abs());
        worst_p = worst_p.max((t_two_sided_p(-t, df) - p).abs());
    }
    ensure(worst_p <= 1e-6, || format!("p-values off by {worst_p:e}"))?;
    Ok(format!(
        "pearson exact to 1e-12, max |rho^2 - R^2| {worst_r2:.1e}, max p-value diff {worst_p:.1e}"
    ))
}

fn run_pipeline(out: &Path, extra: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_finsenti"))
        .args(extra)
        .arg("pipeline")
        .arg("--config")
        .arg(fixtures().join("config.toml"))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("pipeline exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
    })
}

fn ac10_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: Vec<(PathBuf, &[&str])> = vec![
        (tmp.path().join("a"), &[]),
        (tmp.path().join("b"), &[]),
        (tmp.path().join("one-thread"), &["--threads", "1"]),
    ];
    for (dir, extra) in &runs {
        run_pipeline(dir, extra)?;
    }
    let files = ["factor.csv", "report.csv", "baselines.csv", "chart.svg"];
    for f in files {
        let first = std::fs::read(runs[0].0.join(f)).map_err(|e| format!("{f}: {e}"))?;
        for (dir, _) in &runs[1..] {
            let other = std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?;
            ensure(first == other, || format!("{f} differs in {}", dir.display()))?;
        }
    }
    Ok(format!("{} byte-identical across 3 runs (one single-threaded)", files.join(", ")))
}

fn report(id: usize, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let result = match (result, budget) {
        (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
        (r, _) => r,
    };
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("AC{id:<2} {tag}  {name} [{elapsed:.2?}]: {detail}");
    result.is_ok()
}

fn main() {
    println!("acceptance ({} backend)", finsenti::par::backend());
    let mut ok = Vec::new();
    ok.push(report(1, "gradient correctness", Some(Duration::from_secs(10)), ac1_gradients));
    ok.push(report(2, "softmax normalization", None, ac2_softmax));
    ok.push(report(3, "training sanity", Some(Duration::from_secs(60)), ac3_training));
    ok.push(report(4, "tokenizer oracles", Some(Duration::from_secs(30)), ac4_tokenizer));
    ok.push(report(5, "path similarity", None, ac5_paths));
    ok.push(report(6, "senti-score contracts", None, ac6_senti));

    let start = Instant::now();
    let e2e = catch_unwind(end_to_end).map_err(|_| "panicked".to_string()).and_then(|r| r);
    let build_time = start.elapsed();
    match &e2e {
        Ok(e) => {
            let remaining = Duration::from_secs(300).saturating_sub(build_time);
            ok.push(report(7, "synthetic end-to-end", Some(remaining), || {
                ac7_synthetic(e).map(|d| format!("{d}; generation and scoring took {build_time:.2?}"))
            }));
            ok.push(report(8, "baseline nullity", None, || ac8_baselines(e)));
            ok.push(report(9, "statistics oracles", None, || ac9_statistics(e)));
        }
        Err(msg) => {
            for (id, name) in [(7, "synthetic end-to-end"), (8, "baseline nullity"), (9, "statistics oracles")] {
                ok.push(report(id, name, None, || Err(format!("synthetic run failed: {msg}"))));
            }
        }
    }
    ok.push(report(10, "determinism", None, ac10_determinism));

    let passed = ok.iter().filter(|&&b| b).count();
    println!("{passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
