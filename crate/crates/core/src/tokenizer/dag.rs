use super::SegmentationDictionary;

/// Scores closer than this are treated as ties.
const TIE_EPSILON: f64 = 1e-12;

/// For each start position, the sorted exclusive end positions of every
/// dictionary word beginning there, plus the singleton edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationDag {
    edges: Vec<Vec<usize>>,
}

impl SegmentationDag {
    pub fn ends(&self, start: usize) -> &[usize] {
        &self.edges[start]
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[Vec<usize>] {
        &self.edges
    }
}

pub fn build_dag(sentence: &[char], dict: &SegmentationDictionary) -> SegmentationDag {
    let edges = (0..sentence.len())
        .map(|start| {
            let mut ends = dict.prefix_ends(sentence, start);
            if ends.first() != Some(&(start + 1)) {
                ends.insert(0, start + 1);
            }
            ends
        })
        .collect();
    SegmentationDag { edges }
}

/// Log-probability of one segment; unseen words get pseudo-frequency 1.
pub fn segment_log_prob(word: &[char], dict: &SegmentationDictionary) -> f64 {
    let s: String = word.iter().collect();
    let freq = dict.freq(&s).unwrap_or(1) as f64;
    freq.ln() - (dict.total().max(1) as f64).ln()
}

/// Maximum-probability route through the DAG, computed right to left.
/// Returns `(start, end)` segments tiling `0..sentence.len()` and the total
/// log-probability. Near-ties go to the longer segment.
pub fn best_path_scored(
    sentence: &[char],
    dag: &SegmentationDag,
    dict: &SegmentationDictionary,
) -> (Vec<(usize, usize)>, f64) {
    let n = sentence.len();
    let log_total = (dict.total().max(1) as f64).ln();
    let mut route = vec![(0.0f64, n); n + 1];
    for start in (0..n).rev() {
        let mut best: Option<(f64, usize)> = None;
        for &end in dag.ends(start).iter().rev() {
            let word: String = sentence[start..end].iter().collect();
            let freq = dict.freq(&word).unwrap_or(1) as f64;
            let score = freq.ln() - log_total + route[end].0;
            if best.is_none_or(|(b, _)| score > b + TIE_EPSILON) {
                best = Some((score, end));
            }
        }
        route[start] = best.expect("every position has a singleton edge");
    }
    let mut segments = Vec::new();
    let mut pos = 0;
    while pos < n {
        let end = route[pos].1;
        segments.push((pos, end));
        pos = end;
    }
    (segments, route.first().map_or(0.0, |r| if n == 0 { 0.0 } else { r.0 }))
}

pub fn best_path(
    sentence: &[char],
    dag: &SegmentationDag,
    dict: &SegmentationDictionary,
) -> Vec<(usize, usize)> {
    best_path_scored(sentence, dag, dict).0
}
