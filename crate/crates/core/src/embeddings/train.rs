use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::objective::{cbow_position_grad, corpus_loss, full_batch_gradient, skipgram_position_grad};
use super::{cbow_contexts, EmbeddingError, EmbeddingModel, Mode, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchMode {
    /// One update per center position, sentences visited in seeded random order.
    Stochastic,
    /// One exact gradient step on the whole (sub-sampled) corpus per epoch.
    FullBatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrSchedule {
    Constant,
    /// Linear decay from the initial rate to 1/100 of it at the last epoch.
    LinearDecay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub min_count: u64,
    /// Length of the random subsequence drawn from each sentence per epoch;
    /// 0 uses whole sentences.
    pub subsequence_len: usize,
    pub seed: u64,
    pub batch: BatchMode,
    /// Record the corpus loss before training and after every epoch.
    pub track_loss: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SkipGram,
            dim: 100,
            window: 5,
            epochs: 5,
            learning_rate: 0.025,
            schedule: LrSchedule::LinearDecay,
            min_count: 5,
            subsequence_len: 0,
            seed: 0,
            batch: BatchMode::Stochastic,
            track_loss: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::BadConfig(m.to_string()));
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }

    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        match self.schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::LinearDecay if self.epochs <= 1 => self.learning_rate,
            LrSchedule::LinearDecay => {
                let frac = epoch as f64 / (self.epochs - 1) as f64;
                self.learning_rate * (1.0 - 0.99 * frac)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// `losses[0]` before training, `losses[e + 1]` after epoch `e`. Empty
    /// unless loss tracking is enabled.
    pub losses: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

fn sample_subsequences(corpus: &[Vec<usize>], len: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    corpus
        .iter()
        .map(|seq| {
            if len == 0 || len >= seq.len() {
                seq.clone()
            } else {
                let start = rng.random_range(0..=seq.len() - len);
                seq[start..start + len].to_vec()
            }
        })
        .collect()
}

fn sgd_epoch(
    model: &mut EmbeddingModel,
    corpus: &[Vec<usize>],
    order: &[usize],
    window: usize,
    lr: f64,
) {
    let d = model.dim();
    let n = model.len() * d;
    let mut center = vec![0.0; n];
    let mut background = vec![0.0; n];
    let mut row = vec![0.0; d];
    for &s in order {
        let seq = &corpus[s];
        for t in 0..seq.len() {
            let ctx = cbow_contexts(seq, t, window);
            if ctx.is_empty() {
                continue;
            }
            let c = seq[t];
            background.iter_mut().for_each(|x| *x = 0.0);
            match model.mode() {
                Mode::SkipGram => {
                    row.iter_mut().for_each(|x| *x = 0.0);
                    skipgram_position_grad(model, c, &ctx, lr, &mut row, &mut background);
                    let (vt, ut) = model.tables_mut();
                    for (a, g) in vt[c * d..(c + 1) * d].iter_mut().zip(&row) {
                        *a += g;
                    }
                    for (a, g) in ut.iter_mut().zip(&background) {
                        *a += g;
                    }
                }
                Mode::Cbow => {
                    center.iter_mut().for_each(|x| *x = 0.0);
                    cbow_position_grad(model, c, &ctx, lr, &mut center, &mut background);
                    let (vt, ut) = model.tables_mut();
                    for (a, g) in vt.iter_mut().zip(&center) {
                        *a += g;
                    }
                    for (a, g) in ut.iter_mut().zip(&background) {
                        *a += g;
                    }
                }
            }
        }
    }
}

/// Trains an embedding model. Deterministic for a given seed.
pub fn train<S: AsRef<str>>(
    corpus: &[Vec<S>],
    config: &TrainConfig,
) -> Result<(EmbeddingModel, TrainReport), EmbeddingError> {
    config.validate()?;
    let vocab = Vocabulary::build(corpus, config.min_count)?;
    let encoded: Vec<Vec<usize>> = corpus.iter().map(|s| vocab.encode(s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = EmbeddingModel::initialized(vocab, config.dim, config.mode, &mut rng, config.seed);
    let mut report = TrainReport::default();
    if config.track_loss {
        report.losses.push(corpus_loss(&model, &encoded, config.window));
    }
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        report.learning_rates.push(lr);
        let sampled = sample_subsequences(&encoded, config.subsequence_len, &mut rng);
        match config.batch {
            BatchMode::FullBatch => {
                let grad = full_batch_gradient(&model, &sampled, config.window);
                let (vt, ut) = model.tables_mut();
                for (a, g) in vt.iter_mut().zip(&grad.center) {
                    *a -= lr * g;
                }
                for (a, g) in ut.iter_mut().zip(&grad.background) {
                    *a -= lr * g;
                }
            }
            BatchMode::Stochastic => {
                order.shuffle(&mut rng);
                sgd_epoch(&mut model, &sampled, &order, config.window, lr);
            }
        }
        if !model.is_finite() {
            return Err(EmbeddingError::Diverged(epoch));
        }
        if config.track_loss {
            report.losses.push(corpus_loss(&model, &encoded, config.window));
        }
    }
    Ok((model, report))
}
