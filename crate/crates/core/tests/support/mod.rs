//! Independent reference implementations used by the integration tests and
//! the acceptance runner. Everything here is deliberately naive: exhaustive
//! enumeration, repeated linear scans and cubic shortest paths.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use finsenti::embeddings::{
    corpus_loss, full_batch_gradient, grad_cbow, grad_skipgram, softmax_prob_cbow, softmax_prob_skipgram, Mode,
};
use finsenti::senti::{Provenance, Selection};
use finsenti::tokenizer::{path_log_prob, segment_log_prob, HmmParams, SegmentationDictionary, Tag};
use finsenti::{EmbeddingModel, SimilarityVector, SynsetGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- embeddings

/// Model with both tables uniform in `[-scale, scale]`.
pub fn random_model(rng: &mut ChaCha8Rng, vocab: usize, dim: usize, mode: Mode, scale: f64) -> EmbeddingModel {
    let row = |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.random_range(-scale..=scale)).collect::<Vec<_>>();
    let rows = (0..vocab)
        .map(|i| {
            let v = row(rng);
            let u = row(rng);
            (format!("w{i:02}"), v, u)
        })
        .collect();
    EmbeddingModel::from_rows(mode, rows)
}

fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = norm(analytic).max(norm(numeric));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy)]
enum Table {
    Center,
    Background,
}

/// Central difference of `f` with respect to every entry of `rows` in `table`.
fn numeric_grad(model: &EmbeddingModel, table: Table, rows: &[usize], f: &dyn Fn(&EmbeddingModel) -> f64) -> Vec<f64> {
    const H: f64 = 1e-5;
    let d = model.dim();
    let shifted = |r: usize, k: usize, delta: f64| {
        let mut m = model.clone();
        match table {
            Table::Center => m.center_mut(r)[k] += delta,
            Table::Background => m.background_mut(r)[k] += delta,
        }
        f(&m)
    };
    let mut out = Vec::with_capacity(rows.len() * d);
    for &r in rows {
        for k in 0..d {
            out.push((shifted(r, k, H) - shifted(r, k, -H)) / (2.0 * H));
        }
    }
    out
}

/// Largest relative error between the analytic Skip-gram gradient of
/// `log P(w_b | w_c)` and central differences, over every `(c, b)` pair
/// checked.
pub fn skipgram_grad_error(model: &EmbeddingModel, pairs: &[(usize, usize)]) -> f64 {
    let all: Vec<usize> = (0..model.len()).collect();
    let mut worst = 0.0f64;
    for &(c, b) in pairs {
        let g = grad_skipgram(model, c, b);
        let f = move |m: &EmbeddingModel| softmax_prob_skipgram(m, c, b).ln();
        let nc = numeric_grad(model, Table::Center, &[c], &f);
        let nb = numeric_grad(model, Table::Background, &all, &f);
        worst = worst.max(rel_err(&g.center, &nc)).max(rel_err(&g.background, &nb));
    }
    worst
}

/// Same for CBOW `log P(w_c | context)`; contexts hold distinct words so each
/// slot gradient equals the gradient of its row.
pub fn cbow_grad_error(model: &EmbeddingModel, cases: &[(usize, Vec<usize>)]) -> f64 {
    let all: Vec<usize> = (0..model.len()).collect();
    let mut worst = 0.0f64;
    for (c, ctx) in cases {
        let g = grad_cbow(model, *c, ctx);
        let f = |m: &EmbeddingModel| softmax_prob_cbow(m, *c, ctx).ln();
        let nv = numeric_grad(model, Table::Center, &all, &f);
        worst = worst.max(rel_err(&g.center, &nv));
        for &b in ctx {
            let nu = numeric_grad(model, Table::Background, &[b], &f);
            worst = worst.max(rel_err(&g.context, &nu));
        }
    }
    worst
}

/// Full-batch gradient against central differences of the corpus loss.
pub fn corpus_grad_error(model: &EmbeddingModel, corpus: &[Vec<usize>], window: usize) -> f64 {
    let all: Vec<usize> = (0..model.len()).collect();
    let g = full_batch_gradient(model, corpus, window);
    let f = |m: &EmbeddingModel| corpus_loss(m, corpus, window);
    let nv = numeric_grad(model, Table::Center, &all, &f);
    let nu = numeric_grad(model, Table::Background, &all, &f);
    rel_err(&g.center, &nv).max(rel_err(&g.background, &nu))
}

pub fn random_distinct(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let x = rng.random_range(0..n);
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// Worst `|Σ P − 1|` over every conditioning choice of one model.
pub fn softmax_sum_error(model: &EmbeddingModel, rng: &mut ChaCha8Rng) -> f64 {
    let n = model.len();
    let mut worst = 0.0f64;
    for c in 0..n {
        let s: f64 = (0..n).map(|b| softmax_prob_skipgram(model, c, b)).sum();
        worst = worst.max((s - 1.0).abs());
        let k = rng.random_range(1..=4.min(n));
        let ctx: Vec<usize> = (0..k).map(|_| rng.random_range(0..n)).collect();
        let s: f64 = (0..n).map(|j| softmax_prob_cbow(model, j, &ctx)).sum();
        worst = worst.max((s - 1.0).abs());
    }
    worst
}

// ----------------------------------------------------------------- tokenizer

pub const ALPHABET: [char; 4] = ['甲', '乙', '丙', '丁'];

/// `size` distinct words of length 1..=4 with frequencies in 1..=200.
pub fn random_dictionary(rng: &mut ChaCha8Rng, size: usize) -> SegmentationDictionary {
    let mut words: Vec<String> = Vec::new();
    while words.len() < size {
        let len = rng.random_range(1..=4);
        let w: String = (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect();
        if !words.contains(&w) {
            words.push(w);
        }
    }
    SegmentationDictionary::new(words.into_iter().map(|w| (w, rng.random_range(1..=200u64)))).unwrap()
}

/// Every sentence over the alphabet with length in `lens`.
pub fn all_sentences(lens: std::ops::RangeInclusive<usize>) -> Vec<Vec<char>> {
    let mut out = Vec::new();
    for len in lens {
        let total = ALPHABET.len().pow(len as u32);
        for mut code in 0..total {
            let mut s = Vec::with_capacity(len);
            for _ in 0..len {
                s.push(ALPHABET[code % ALPHABET.len()]);
                code /= ALPHABET.len();
            }
            out.push(s);
        }
    }
    out
}

pub fn random_sentence(rng: &mut ChaCha8Rng, len: usize) -> Vec<char> {
    (0..len).map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())]).collect()
}

/// Best total log-probability over all segmentations whose pieces are
/// dictionary words or single characters, by enumerating every cut set.
pub fn exhaustive_segmentation(sentence: &[char], dict: &SegmentationDictionary) -> f64 {
    let n = sentence.len();
    if n == 0 {
        return 0.0;
    }
    // piece[a][b]: score of sentence[a..b] if it is an allowed piece
    let piece: Vec<Vec<Option<f64>>> = (0..n)
        .map(|a| {
            (0..=n)
                .map(|b| {
                    if b <= a {
                        return None;
                    }
                    let w: String = sentence[a..b].iter().collect();
                    (b == a + 1 || dict.contains(&w)).then(|| segment_log_prob(&sentence[a..b], dict))
                })
                .collect()
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    // bit i set: a cut after character i
    'cuts: for cuts in 0u32..(1 << (n - 1)) {
        let mut total = 0.0;
        let mut start = 0;
        for end in 1..=n {
            if end == n || cuts & (1 << (end - 1)) != 0 {
                match piece[start][end] {
                    Some(lp) => total += lp,
                    None => continue 'cuts,
                }
                start = end;
            }
        }
        best = best.max(total);
    }
    best
}

/// Random HMM with valid structure; each emission table covers a random
/// subset of the alphabet so the floor is exercised too.
pub fn random_hmm(rng: &mut ChaCha8Rng) -> HmmParams {
    let logs = |k: usize, rng: &mut ChaCha8Rng| {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|x| (x / s).ln()).collect::<Vec<_>>()
    };
    let ninf = f64::NEG_INFINITY;
    let start = logs(2, rng);
    let initial = [start[0], ninf, ninf, start[1]];
    let mut transition = [[ninf; 4]; 4];
    for from in Tag::ALL {
        let allowed: Vec<Tag> = Tag::ALL.into_iter().filter(|t| from.may_precede(*t)).collect();
        let p = logs(allowed.len(), rng);
        for (t, lp) in allowed.into_iter().zip(p) {
            transition[from as usize][t as usize] = lp;
        }
    }
    let emission = std::array::from_fn(|_| {
        let chars: Vec<char> = ALPHABET.iter().copied().filter(|_| rng.random_bool(0.8)).collect();
        let p = logs(chars.len(), rng);
        chars.into_iter().zip(p).collect::<HashMap<char, f64>>()
    });
    HmmParams::new(initial, transition, emission).unwrap()
}

fn well_formed(tags: &[Tag]) -> bool {
    let Some((first, last)) = tags.first().zip(tags.last()) else {
        return true;
    };
    first.may_start() && last.may_end() && tags.windows(2).all(|w| w[0].may_precede(w[1]))
}

/// Best log-probability over all `4^L` tag sequences that decode to words.
pub fn brute_force_bmes(span: &[char], hmm: &HmmParams) -> f64 {
    let n = span.len();
    let mut best = f64::NEG_INFINITY;
    let mut tags = vec![Tag::B; n];
    for mut code in 0..4usize.pow(n as u32) {
        for t in tags.iter_mut() {
            *t = Tag::ALL[code % 4];
            code /= 4;
        }
        if well_formed(&tags) {
            best = best.max(path_log_prob(span, &tags, hmm));
        }
    }
    best
}

pub fn tagging_is_well_formed(tags: &[Tag]) -> bool {
    well_formed(tags)
}

// --------------------------------------------------------------------- graph

/// Graph on `s00..s{n-1}` where each pair is joined with probability `p`.
/// Returns the graph and its edge list.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> (SynsetGraph, Vec<(usize, usize)>) {
    let mut g = SynsetGraph::new();
    for i in 0..n {
        g.add_synset(node(i)).unwrap();
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                g.add_edge(&node(i), &node(j)).unwrap();
                edges.push((i, j));
            }
        }
    }
    (g, edges)
}

pub fn node(i: usize) -> String {
    format!("s{i:02}")
}

/// All-pairs hop counts, `None` when unreachable.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<usize>>> {
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d.into_iter()
        .map(|row| row.into_iter().map(|x| (x < INF).then_some(x)).collect())
        .collect()
}

// --------------------------------------------------------------------- senti

/// Repeatedly takes the best remaining index: highest key, lowest index on
/// ties.
fn take_best(pool: &[usize], k: usize, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut remaining = pool.to_vec();
    let mut out = Vec::new();
    while out.len() < k && !remaining.is_empty() {
        let mut best = 0;
        for i in 1..remaining.len() {
            let (a, b) = (key(remaining[i]), key(remaining[best]));
            if a > b || (a == b && remaining[i] < remaining[best]) {
                best = i;
            }
        }
        out.push(remaining.remove(best));
    }
    out
}

pub fn brute_force_select(vec: &SimilarityVector, n: usize, m: usize) -> Selection {
    let usable: Vec<usize> = (0..vec.w2v.len()).filter(|&i| vec.w2v[i] > -1.0).collect();
    let top_n = take_best(&usable, n, |i| vec.w2v[i]);
    let (top_m, provenance) = if vec.sem.iter().any(Option::is_some) {
        (take_best(&top_n, m, |i| vec.sem[i].unwrap_or(-1.0)), Provenance::Full)
    } else {
        (top_n[..m.min(top_n.len())].to_vec(), Provenance::Fallback)
    };
    Selection {
        top_n,
        top_m,
        provenance,
    }
}

pub fn brute_force_score(vec: &SimilarityVector, labels: &[i8], n: usize, m: usize) -> f64 {
    let sel = brute_force_select(vec, n, m);
    let (mut num, mut den) = (0.0, 0.0);
    for &i in &sel.top_m {
        let w = vec.w2v[i].max(0.0);
        num += w * f64::from(labels[i]);
        den += w;
    }
    if den > 0.0 {
        (num / den).clamp(-1.0, 1.0)
    } else {
        0.0
    }
}

/// Random similarity vector with coarse values so ties are common.
pub fn random_similarity_vector(rng: &mut ChaCha8Rng, len: usize) -> SimilarityVector {
    let coarse = rng.random_bool(0.5);
    let draw = |lo: f64, rng: &mut ChaCha8Rng| {
        let x: f64 = rng.random_range(lo..=1.0);
        if coarse {
            (x * 4.0).round() / 4.0
        } else {
            x
        }
    };
    let w2v: Vec<f64> = (0..len).map(|_| draw(-1.0, rng)).collect();
    let sem_rate = [0.0, 0.3, 1.0][rng.random_range(0..3)];
    let sem: Vec<Option<f64>> = (0..len)
        .map(|_| rng.random_bool(sem_rate).then(|| draw(0.0, rng)))
        .collect();
    SimilarityVector::new(w2v, sem)
}

// ----------------------------------------------------------------- statistics

/// `2 · sf(|t|, df)` as tabulated by an external statistics package.
pub const T_TABLE: [(f64, f64, f64); 15] = [
    (0.5, 1.0, 0.7048327646991336),
    (1.0, 1.0, 0.49999999999999956),
    (2.0, 1.0, 0.2951672353008664),
    (2.5, 1.0, 0.2422378831816867),
    (4.0, 1.0, 0.15595826075473865),
    (0.5, 10.0, 0.6278936057429729),
    (1.0, 10.0, 0.3408931323020601),
    (2.0, 10.0, 0.07338803477074039),
    (2.5, 10.0, 0.031446844236608776),
    (4.0, 10.0, 0.0025183326247366924),
    (0.5, 100.0, 0.6181735658308867),
    (1.0, 100.0, 0.3197241557841236),
    (2.0, 100.0, 0.04821217873113364),
    (2.5, 100.0, 0.014045789124077166),
    (4.0, 100.0, 0.0001215236443007616),
];
