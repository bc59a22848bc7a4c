//! Full-softmax probabilities, losses and analytic gradients.

use super::{dot, EmbeddingModel};
use crate::par;

/// Sequences per work unit for corpus-level reductions. Fixed so the
/// reduction order never depends on the thread count.
const CHUNK: usize = 16;

/// Numerically stable `log softmax`.
pub fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scores.iter().map(|s| s - lse).collect()
}

/// Context positions of `t` inside a sequence of length `len`: offsets
/// `-m..=m` except 0, clipped to the sequence.
pub fn context_positions(len: usize, t: usize, window: usize) -> impl Iterator<Item = usize> {
    let lo = t.saturating_sub(window);
    let hi = (t + window).min(len.saturating_sub(1));
    (lo..=hi).filter(move |&j| j != t && j < len)
}

/// Word indices in the context of position `t`.
pub fn cbow_contexts(seq: &[usize], t: usize, window: usize) -> Vec<usize> {
    context_positions(seq.len(), t, window).map(|j| seq[j]).collect()
}

/// `log P(i | center c)` for every word `i`.
fn skipgram_log_probs(model: &EmbeddingModel, c: usize) -> Vec<f64> {
    let vc = model.center(c);
    let scores: Vec<f64> = (0..model.len()).map(|i| dot(model.background(i), vc)).collect();
    log_softmax(&scores)
}

/// Mean of the background vectors of `context`.
fn context_mean(model: &EmbeddingModel, context: &[usize]) -> Vec<f64> {
    let mut h = vec![0.0; model.dim()];
    for &b in context {
        for (hk, uk) in h.iter_mut().zip(model.background(b)) {
            *hk += uk;
        }
    }
    let inv = 1.0 / context.len() as f64;
    h.iter_mut().for_each(|x| *x *= inv);
    h
}

/// `log P(i | context)` for every candidate center `i`, plus the context mean.
fn cbow_log_probs(model: &EmbeddingModel, context: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let h = context_mean(model, context);
    let scores: Vec<f64> = (0..model.len()).map(|i| dot(model.center(i), &h)).collect();
    (log_softmax(&scores), h)
}

/// `P(w_b | w_c) = exp(u_b·v_c) / Σ_i exp(u_i·v_c)`.
pub fn softmax_prob_skipgram(model: &EmbeddingModel, c: usize, b: usize) -> f64 {
    skipgram_log_probs(model, c)[b].exp()
}

/// `P(w_c | context) = softmax_c(v_i · mean(u_context))`. The mean divides
/// by the number of context words actually present.
pub fn softmax_prob_cbow(model: &EmbeddingModel, c: usize, context: &[usize]) -> f64 {
    assert!(!context.is_empty(), "CBOW needs at least one context word");
    cbow_log_probs(model, context).0[c].exp()
}

/// `-(1/T) Σ_t Σ_{j} log P(w_{t+j} | w_t)` over in-range window offsets.
pub fn loss_skipgram(model: &EmbeddingModel, seq: &[usize], window: usize) -> f64 {
    if seq.is_empty() {
        return 0.0;
    }
    skipgram_nll(model, seq, window) / seq.len() as f64
}

fn skipgram_nll(model: &EmbeddingModel, seq: &[usize], window: usize) -> f64 {
    let mut total = 0.0;
    for t in 0..seq.len() {
        let mut ctx = context_positions(seq.len(), t, window).peekable();
        if ctx.peek().is_none() {
            continue;
        }
        let lp = skipgram_log_probs(model, seq[t]);
        total -= ctx.map(|j| lp[seq[j]]).sum::<f64>();
    }
    total
}

/// `-Σ_t log P(w_t | context_t)`. Positions without any context word are
/// skipped.
pub fn loss_cbow(model: &EmbeddingModel, seq: &[usize], window: usize) -> f64 {
    let mut total = 0.0;
    for t in 0..seq.len() {
        let ctx = cbow_contexts(seq, t, window);
        if ctx.is_empty() {
            continue;
        }
        total -= cbow_log_probs(model, &ctx).0[seq[t]];
    }
    total
}

/// Gradient of `log P(w_b | w_c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramGrad {
    /// `∂/∂v_c = u_b − Σ_j P(w_j|w_c) u_j`
    pub center: Vec<f64>,
    /// `∂/∂u_j = (1[j=b] − P(w_j|w_c)) v_c`, row-major `|D| × dim`.
    pub background: Vec<f64>,
}

pub fn grad_skipgram(model: &EmbeddingModel, c: usize, b: usize) -> SkipGramGrad {
    let d = model.dim();
    let probs: Vec<f64> = skipgram_log_probs(model, c).into_iter().map(f64::exp).collect();
    let mut center = model.background(b).to_vec();
    let mut background = vec![0.0; model.len() * d];
    let vc = model.center(c);
    for (j, &p) in probs.iter().enumerate() {
        for (g, u) in center.iter_mut().zip(model.background(j)) {
            *g -= p * u;
        }
        let coef = if j == b { 1.0 - p } else { -p };
        for (g, v) in background[j * d..(j + 1) * d].iter_mut().zip(vc) {
            *g = coef * v;
        }
    }
    SkipGramGrad { center, background }
}

/// Gradient of `log P(w_c | context)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CbowGrad {
    /// `∂/∂u_{b_i} = (1/C)(v_c − Σ_j P(w_j|context) v_j)`, identical for every
    /// context slot. A word occupying several slots receives it once per slot.
    pub context: Vec<f64>,
    /// `∂/∂v_j = (1[j=c] − P(w_j|context)) · mean(u_context)`, `|D| × dim`.
    pub center: Vec<f64>,
}

pub fn grad_cbow(model: &EmbeddingModel, c: usize, context: &[usize]) -> CbowGrad {
    assert!(!context.is_empty(), "CBOW needs at least one context word");
    let d = model.dim();
    let (lp, h) = cbow_log_probs(model, context);
    let inv = 1.0 / context.len() as f64;
    let mut ctx_grad = model.center(c).to_vec();
    let mut center = vec![0.0; model.len() * d];
    for (j, lpj) in lp.iter().enumerate() {
        let p = lpj.exp();
        for (g, v) in ctx_grad.iter_mut().zip(model.center(j)) {
            *g -= p * v;
        }
        let coef = if j == c { 1.0 - p } else { -p };
        for (g, hk) in center[j * d..(j + 1) * d].iter_mut().zip(&h) {
            *g = coef * hk;
        }
    }
    ctx_grad.iter_mut().for_each(|g| *g *= inv);
    CbowGrad {
        context: ctx_grad,
        center,
    }
}

/// Dense gradient for both tables, row-major `|D| × dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGrad {
    pub center: Vec<f64>,
    pub background: Vec<f64>,
}

impl TableGrad {
    fn zeros(n: usize) -> Self {
        Self {
            center: vec![0.0; n],
            background: vec![0.0; n],
        }
    }

    fn add(&mut self, other: &TableGrad) {
        for (a, b) in self.center.iter_mut().zip(&other.center) {
            *a += b;
        }
        for (a, b) in self.background.iter_mut().zip(&other.background) {
            *a += b;
        }
    }
}

/// Accumulates `scale · ∇ Σ_j log P(context_j | c)` for one Skip-gram
/// position. All context words share one softmax over the center.
pub(crate) fn skipgram_position_grad(
    model: &EmbeddingModel,
    c: usize,
    context: &[usize],
    scale: f64,
    center_row: &mut [f64],
    background: &mut [f64],
) {
    let d = model.dim();
    let n_ctx = context.len() as f64;
    let probs: Vec<f64> = skipgram_log_probs(model, c).into_iter().map(f64::exp).collect();
    let vc = model.center(c);
    for &b in context {
        for (g, u) in center_row.iter_mut().zip(model.background(b)) {
            *g += scale * u;
        }
    }
    for (j, &p) in probs.iter().enumerate() {
        let uj = model.background(j);
        for (g, u) in center_row.iter_mut().zip(uj) {
            *g -= scale * n_ctx * p * u;
        }
        let coef = -n_ctx * p;
        for (g, v) in background[j * d..(j + 1) * d].iter_mut().zip(vc) {
            *g += scale * coef * v;
        }
    }
    for &b in context {
        for (g, v) in background[b * d..(b + 1) * d].iter_mut().zip(vc) {
            *g += scale * v;
        }
    }
}

/// Accumulates `scale · ∇ log P(c | context)` for one CBOW position.
pub(crate) fn cbow_position_grad(
    model: &EmbeddingModel,
    c: usize,
    context: &[usize],
    scale: f64,
    center: &mut [f64],
    background: &mut [f64],
) {
    let g = grad_cbow(model, c, context);
    let d = model.dim();
    for (a, b) in center.iter_mut().zip(&g.center) {
        *a += scale * b;
    }
    for &b in context {
        for (a, x) in background[b * d..(b + 1) * d].iter_mut().zip(&g.context) {
            *a += scale * x;
        }
    }
}

fn sequence_grad(model: &EmbeddingModel, seq: &[usize], window: usize, scale: f64, acc: &mut TableGrad) {
    let d = model.dim();
    for t in 0..seq.len() {
        let ctx = cbow_contexts(seq, t, window);
        if ctx.is_empty() {
            continue;
        }
        let c = seq[t];
        match model.mode() {
            super::Mode::SkipGram => skipgram_position_grad(
                model,
                c,
                &ctx,
                scale,
                &mut acc.center[c * d..(c + 1) * d],
                &mut acc.background,
            ),
            super::Mode::Cbow => {
                cbow_position_grad(model, c, &ctx, scale, &mut acc.center, &mut acc.background)
            }
        }
    }
}

/// Mean per-token negative log-likelihood of the corpus. For a single
/// Skip-gram sequence this is exactly [`loss_skipgram`]; for CBOW it is
/// [`loss_cbow`] divided by the token count.
pub fn corpus_loss(model: &EmbeddingModel, corpus: &[Vec<usize>], window: usize) -> f64 {
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    if tokens == 0 {
        return 0.0;
    }
    let partial = par::map_chunks(corpus, CHUNK, |chunk| {
        chunk
            .iter()
            .map(|seq| match model.mode() {
                super::Mode::SkipGram => skipgram_nll(model, seq, window),
                super::Mode::Cbow => loss_cbow(model, seq, window),
            })
            .sum::<f64>()
    });
    partial.iter().sum::<f64>() / tokens as f64
}

/// Gradient of [`corpus_loss`] with respect to both tables. Chunks are
/// reduced in corpus order, so the result is bitwise deterministic.
pub fn full_batch_gradient(model: &EmbeddingModel, corpus: &[Vec<usize>], window: usize) -> TableGrad {
    let n = model.len() * model.dim();
    let tokens: usize = corpus.iter().map(Vec::len).sum();
    let mut total = TableGrad::zeros(n);
    if tokens == 0 {
        return total;
    }
    let scale = -1.0 / tokens as f64;
    let parts = par::map_chunks(corpus, CHUNK, |chunk| {
        let mut acc = TableGrad::zeros(n);
        for seq in chunk {
            sequence_grad(model, seq, window, scale, &mut acc);
        }
        acc
    });
    for p in &parts {
        total.add(p);
    }
    total
}
