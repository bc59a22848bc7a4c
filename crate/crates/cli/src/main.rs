//! `finsenti`: news sentiment factors from the command line.

mod config;
mod pipeline;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use finsenti::analysis;
use finsenti::embeddings::Mode;
use finsenti::factor;
use finsenti::ingest;
use finsenti::synth::{SynthConfig, SynthWorld};

use config::{require, PipelineConfig};
use pipeline::{in_stage, StageFailure};
use stages::{BaselineRequest, ScoreWordsInputs};

#[cfg(feature = "parallel")]
const BUILD: &str = concat!(env!("CARGO_PKG_VERSION"), " (rayon)");
#[cfg(not(feature = "parallel"))]
const BUILD: &str = concat!(env!("CARGO_PKG_VERSION"), " (sequential)");

#[derive(Parser)]
#[command(name = "finsenti", version = BUILD, about = "Sentiment factors from Chinese financial news")]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment and clean a corpus; writes `id<TAB>tokens` lines.
    Tokenize(TokenizeArgs),
    /// Train word embeddings on a segmented corpus.
    Train(TrainArgs),
    /// Score the common word set against the lexicon.
    ScoreWords(ScoreWordsArgs),
    /// Score every article with a word-score cache.
    ScoreArticles(ScoreArticlesArgs),
    /// Build standard and adjusted daily factors.
    Factor(FactorArgs),
    /// Correlate factors with the index.
    Analyze(AnalyzeArgs),
    /// Random and temperature baselines.
    Baseline(BaselineArgs),
    /// Chart the headline factor against the index.
    Plot(PlotArgs),
    /// Run every stage and write a manifest.
    Pipeline(PipelineArgs),
    /// Generate a synthetic fixture set.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<PipelineConfig> {
        PipelineConfig::load_or_default(self.config.as_deref())
    }
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long = "dict")]
    dictionary: Option<PathBuf>,
    #[arg(long)]
    hmm: Option<PathBuf>,
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

impl SegmentArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        override_path(&mut cfg.paths.dictionary, &self.dictionary);
        override_path(&mut cfg.paths.hmm, &self.hmm);
        override_path(&mut cfg.paths.stopwords, &self.stopwords);
    }
}

fn override_path(slot: &mut Option<PathBuf>, flag: &Option<PathBuf>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

fn override_value<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

#[derive(Args)]
struct TokenizeArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    seg: SegmentArgs,
    /// JSONL corpus or text with one sentence per line.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Keep stop words, numbers and punctuation.
    #[arg(long)]
    raw: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    seg: SegmentArgs,
    /// JSONL corpus or text with one sentence per line.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long = "lr")]
    learning_rate: Option<f64>,
    #[arg(long)]
    min_count: Option<u64>,
    /// Subsequence length sampled per sentence and epoch; 0 keeps whole sentences.
    #[arg(long)]
    subsequence: Option<usize>,
    /// `sgd` or `full`.
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// CSV of the loss before training and after each epoch.
    #[arg(long)]
    loss_log: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreWordsArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory with synsets.tsv, edges.tsv and mapping.tsv.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Common word list to score.
    #[arg(long)]
    words: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// Human-labeled words to evaluate against.
    #[arg(long)]
    labeled: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArticlesArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    seg: SegmentArgs,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    cache: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FactorArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[command(flatten)]
    seg: SegmentArgs,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Article scores from `score-articles`, instead of corpus and cache.
    #[arg(long, conflicts_with_all = ["corpus", "cache"])]
    scores: Option<PathBuf>,
    /// Trailing window of the adjusted factor.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    factor: PathBuf,
    #[arg(long)]
    market: Option<PathBuf>,
    /// Baselines appended to the report.
    #[arg(long, value_delimiter = ',', value_parser = ["random", "temperature"])]
    baselines: Vec<String>,
    #[arg(long)]
    temperature: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also correlate first differences of both series.
    #[arg(long)]
    returns: bool,
    /// Chart output.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Report CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    factor: PathBuf,
    #[arg(long)]
    market: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = ["random", "temperature"])]
    baselines: Vec<String>,
    #[arg(long)]
    temperature: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    factor: PathBuf,
    #[arg(long)]
    market: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long, required_unless_present = "from_manifest")]
    config: Option<PathBuf>,
    /// Output directory; defaults to the manifest's directory on re-runs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-run from a manifest instead of a config.
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    /// Only this stage (with --from-manifest).
    #[arg(long, requires = "from_manifest")]
    stage: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SynthConfig::default().days)]
    days: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        finsenti::par::set_thread_cap(t.max(1));
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("finsenti: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), StageFailure> {
    match command {
        Command::Tokenize(a) => in_stage("tokenize", tokenize(a)),
        Command::Train(a) => in_stage("train", train(a)),
        Command::ScoreWords(a) => in_stage("score-words", score_words(a)),
        Command::ScoreArticles(a) => in_stage("score-articles", score_articles(a)),
        Command::Factor(a) => in_stage("factor", factor_cmd(a)),
        Command::Analyze(a) => in_stage("analyze", analyze(a)),
        Command::Baseline(a) => in_stage("baseline", baseline(a)),
        Command::Plot(a) => in_stage("plot", plot(a)),
        Command::Pipeline(a) => run_pipeline(a),
        Command::Synth(a) => in_stage("synth", synth(a)),
    }
}

fn print_stage(stage: &str, msg: &str) {
    println!("{stage:>14}  {msg}");
}

fn tokenize(a: TokenizeArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    a.seg.apply(&mut cfg);
    let p = &cfg.paths;
    let seg = stages::segmenter(require(&p.dictionary, "dictionary")?, p.hmm.as_deref())?;
    let cleaner = if a.raw {
        finsenti::tokenizer::Cleaner::new([], vec![finsenti::tokenizer::StripRule::pattern(r"\s+")?])
    } else {
        stages::scoring_cleaner(p.stopwords.as_deref())?
    };
    let input = a.input.as_ref().or(p.corpus.as_ref()).context("no input given (pass --input)")?;
    let n = stages::tokenize(input, &seg, &cleaner, &a.out)?;
    print_stage("tokenize", &format!("{n} lines -> {}", a.out.display()));
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    a.seg.apply(&mut cfg);
    override_path(&mut cfg.paths.training, &a.corpus);
    let t = &mut cfg.train;
    override_value(&mut t.mode, &a.mode.map(|m| m.to_string()));
    override_value(&mut t.dim, &a.dim);
    override_value(&mut t.window, &a.window);
    override_value(&mut t.epochs, &a.epochs);
    override_value(&mut t.learning_rate, &a.learning_rate);
    override_value(&mut t.min_count, &a.min_count);
    override_value(&mut t.subsequence_len, &a.subsequence);
    override_value(&mut t.batch, &a.batch);
    override_value(&mut cfg.seed, &a.seed);
    let tc = cfg.train.to_train_config(cfg.seed)?;
    let p = &cfg.paths;
    let seg = stages::segmenter(require(&p.dictionary, "dictionary")?, p.hmm.as_deref())?;
    let s = stages::train(require(&p.training, "training")?, &seg, &tc, &a.out, a.loss_log.as_deref())?;
    print_stage("train", &format!("{} words -> {}", s.vocab, a.out.display()));
    Ok(())
}

fn score_words(a: ScoreWordsArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    let p = &mut cfg.paths;
    override_path(&mut p.embeddings, &a.model);
    override_path(&mut p.graph, &a.graph);
    override_path(&mut p.lexicon, &a.lexicon);
    override_path(&mut p.common_words, &a.words);
    override_path(&mut p.labeled, &a.labeled);
    override_value(&mut cfg.score.n, &a.n);
    override_value(&mut cfg.score.m, &a.m);
    override_value(&mut cfg.score.threshold, &a.threshold);
    let p = &cfg.paths;
    let model = require(&p.embeddings, "embeddings").context("pass --model")?;
    anyhow::ensure!(model.exists(), "model file {} not found", model.display());
    let inputs = ScoreWordsInputs {
        model,
        graph: require(&p.graph, "graph")?,
        lexicon: require(&p.lexicon, "lexicon")?,
        words: require(&p.common_words, "common_words")?,
        labeled: p.labeled.as_deref(),
    };
    let sc = &cfg.score;
    let s = stages::score_words(&inputs, sc.n, sc.m, sc.threshold, &a.out)?;
    print_stage(
        "score-words",
        &format!("{} scored, {} by fallback, {} without vectors", s.scored, s.fallback, s.omitted),
    );
    if let Some(acc) = s.accuracy {
        print!("{}", stages::accuracy_json(&acc, sc.threshold));
    }
    Ok(())
}

fn score_articles(a: ScoreArticlesArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    a.seg.apply(&mut cfg);
    override_path(&mut cfg.paths.corpus, &a.corpus);
    let p = &cfg.paths;
    let seg = stages::segmenter(require(&p.dictionary, "dictionary")?, p.hmm.as_deref())?;
    let cleaner = stages::scoring_cleaner(p.stopwords.as_deref())?;
    let scores = stages::score_articles(require(&p.corpus, "corpus")?, &a.cache, &seg, &cleaner)?;
    stages::write(&a.out, &factor::article_scores_to_csv(&scores))?;
    print_stage("score-articles", &format!("{} articles -> {}", scores.len(), a.out.display()));
    Ok(())
}

fn factor_cmd(a: FactorArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    a.seg.apply(&mut cfg);
    override_path(&mut cfg.paths.corpus, &a.corpus);
    override_value(&mut cfg.factor.window, &a.window);
    let scores = match &a.scores {
        Some(path) => factor::load_article_scores(path)?,
        None => {
            let p = &cfg.paths;
            let cache = a.cache.as_deref().context("pass --cache (or --scores)")?;
            let seg = stages::segmenter(require(&p.dictionary, "dictionary")?, p.hmm.as_deref())?;
            let cleaner = stages::scoring_cleaner(p.stopwords.as_deref())?;
            stages::score_articles(require(&p.corpus, "corpus")?, cache, &seg, &cleaner)?
        }
    };
    let (standard, adjusted) = stages::factors(&scores, cfg.factor.window)?;
    factor::write_factors(&a.out, &[&standard, &adjusted])?;
    print_stage("factor", &format!("{} days -> {}", standard.len(), a.out.display()));
    Ok(())
}

fn emit_report(rows: &[analysis::ReportRow], out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => Ok(analysis::write_report(p, rows)?),
        None => {
            print!("{}", analysis::report_to_csv(rows));
            Ok(())
        }
    }
}

fn baseline_request<'a>(
    cfg: &'a PipelineConfig,
    requested: &[String],
) -> Result<BaselineRequest<'a>> {
    let want = |b: &str| requested.iter().any(|x| x == b);
    Ok(BaselineRequest {
        random: want("random"),
        temperature: if want("temperature") {
            Some(require(&cfg.paths.temperature, "temperature")?)
        } else {
            None
        },
        trials: cfg.analysis.trials,
        seed: pipeline::derive_seed(cfg.seed, "baseline"),
    })
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    override_path(&mut cfg.paths.market, &a.market);
    override_path(&mut cfg.paths.temperature, &a.temperature);
    override_value(&mut cfg.analysis.trials, &a.trials);
    override_value(&mut cfg.seed, &a.seed);
    cfg.validate()?;
    let market = ingest::load_market_csv(require(&cfg.paths.market, "market")?)?;
    let mut rows = stages::analyze(&a.factor, &market, a.returns || cfg.analysis.returns)?;
    rows.extend(stages::baselines(&a.factor, &market, &baseline_request(&cfg, &a.baselines)?)?);
    emit_report(&rows, a.out.as_deref())?;
    if let Some(svg) = &a.plot {
        stages::plot(&a.factor, &market, svg)?;
    }
    Ok(())
}

fn baseline(a: BaselineArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    override_path(&mut cfg.paths.market, &a.market);
    override_path(&mut cfg.paths.temperature, &a.temperature);
    override_value(&mut cfg.analysis.trials, &a.trials);
    override_value(&mut cfg.seed, &a.seed);
    cfg.validate()?;
    let requested = if a.baselines.is_empty() { cfg.analysis.baselines.clone() } else { a.baselines.clone() };
    let market = ingest::load_market_csv(require(&cfg.paths.market, "market")?)?;
    let rows = stages::baselines(&a.factor, &market, &baseline_request(&cfg, &requested)?)?;
    emit_report(&rows, a.out.as_deref())
}

fn plot(a: PlotArgs) -> Result<()> {
    let mut cfg = a.config.load()?;
    override_path(&mut cfg.paths.market, &a.market);
    let market = ingest::load_market_csv(require(&cfg.paths.market, "market")?)?;
    stages::plot(&a.factor, &market, &a.out)
}

fn run_pipeline(a: PipelineArgs) -> Result<(), StageFailure> {
    let mut log = print_stage;
    if let Some(manifest) = &a.from_manifest {
        pipeline::rerun(manifest, a.stage.as_deref(), a.out.as_deref(), &mut log)?;
        println!("all re-executed artifacts match {}", manifest.display());
        return Ok(());
    }
    let config_path = a.config.as_deref().expect("clap enforces --config");
    let mut cfg = in_stage("setup", PipelineConfig::load(config_path))?;
    override_value(&mut cfg.seed, &a.seed);
    override_value(&mut cfg.analysis.trials, &a.trials);
    override_value(&mut cfg.factor.window, &a.window);
    override_value(&mut cfg.train.epochs, &a.epochs);
    let out = a.out.unwrap_or_else(|| PathBuf::from("run"));
    pipeline::run(&cfg, &out, BUILD, &mut log)?;
    println!("manifest written to {}", out.join(pipeline::MANIFEST).display());
    Ok(())
}

/// Config for the files `synth` writes, with paths relative to them.
fn fixture_config(seed: u64) -> String {
    format!(
        r#"seed = {seed}

[paths]
dictionary = "dictionary.tsv"
hmm = "hmm.txt"
stopwords = "stopwords.txt"
lexicon = "lexicon.tsv"
common_words = "common_words.txt"
graph = "graph"
corpus = "corpus.jsonl"
training = "training.txt"
market = "market.csv"
temperature = "temperature.csv"
labeled = "labeled_words.tsv"

[train]
mode = "skipgram"
dim = 16
window = 3
epochs = 5
learning_rate = 0.025
schedule = "linear"
min_count = 2
subsequence_len = 0
batch = "sgd"

[score]
n = 20
m = 5
threshold = 0.1

[factor]
window = 7

[analysis]
trials = 1000
baselines = ["random", "temperature"]
returns = false
"#
    )
}

fn synth(a: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        seed: a.seed,
        days: a.days,
        ..SynthConfig::default()
    };
    let world = SynthWorld::generate(&config);
    world.write_fixtures(&a.out)?;
    stages::write(&a.out.join("config.toml"), &fixture_config(a.seed))?;
    print_stage(
        "synth",
        &format!("{} articles over {} days -> {}", world.articles.len(), a.days, a.out.display()),
    );
    Ok(())
}
