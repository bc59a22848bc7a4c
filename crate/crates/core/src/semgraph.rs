//! Synset graph semantic similarity.
//!
//! Synsets are nodes joined by undirected relation edges; words map to one or
//! more synsets. Path similarity between synsets is `1 / (1 + d)` for an
//! edge-count shortest path `d`, 0 when no path exists. Word similarity is the
//! maximum over all synset pairs of the two words.
//!
//! Data files:
//! * synsets: one `synset_id` per line
//! * edges: `id<TAB>id` per line
//! * mapping: `word<TAB>synset_id` per line, repeated for polysemous words

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown synset {0:?}")]
    UnknownSynset(String),
    #[error("duplicate synset {0:?}")]
    DuplicateSynset(String),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynsetGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    adjacency: Vec<BTreeSet<usize>>,
    words: BTreeMap<String, BTreeSet<usize>>,
}

impl SynsetGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_synset(&mut self, id: impl Into<String>) -> Result<usize, GraphError> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateSynset(id));
        }
        let i = self.ids.len();
        self.index.insert(id.clone(), i);
        self.ids.push(id);
        self.adjacency.push(BTreeSet::new());
        Ok(i)
    }

    fn resolve(&self, id: &str) -> Result<usize, GraphError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::UnknownSynset(id.to_string()))
    }

    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<(), GraphError> {
        let (i, j) = (self.resolve(a)?, self.resolve(b)?);
        if i != j {
            self.adjacency[i].insert(j);
            self.adjacency[j].insert(i);
        }
        Ok(())
    }

    pub fn map_word(&mut self, word: impl Into<String>, synset: &str) -> Result<(), GraphError> {
        let s = self.resolve(synset)?;
        self.words.entry(word.into()).or_default().insert(s);
        Ok(())
    }

    pub fn synset_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn synset_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains_synset(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn is_mapped(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    pub fn synsets_of(&self, word: &str) -> Option<impl Iterator<Item = &str>> {
        self.words
            .get(word)
            .map(|s| s.iter().map(|&i| self.ids[i].as_str()))
    }

    pub fn mapped_words(&self) -> impl Iterator<Item = &str> {
        self.words.keys().map(String::as_str)
    }

    /// Edge-count distances from every source to every synset, `None` when
    /// unreachable.
    fn bfs(&self, sources: impl IntoIterator<Item = usize>) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.ids.len()];
        let mut queue = VecDeque::new();
        for s in sources {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(n) = queue.pop_front() {
            let next = dist[n].expect("queued nodes have a distance") + 1;
            for &m in &self.adjacency[n] {
                if dist[m].is_none() {
                    dist[m] = Some(next);
                    queue.push_back(m);
                }
            }
        }
        dist
    }

    pub fn shortest_path_len(&self, a: &str, b: &str) -> Result<Option<usize>, GraphError> {
        let (i, j) = (self.resolve(a)?, self.resolve(b)?);
        Ok(self.bfs([i])[j])
    }

    pub fn path_similarity(&self, a: &str, b: &str) -> Result<f64, GraphError> {
        Ok(similarity_from_distance(self.shortest_path_len(a, b)?))
    }

    /// Best path similarity over all synset pairs of the two words; `None`
    /// if either word is unmapped.
    pub fn word_similarity(&self, word1: &str, word2: &str) -> Option<f64> {
        let targets = self.words.get(word2)?;
        let dist = self.bfs(self.words.get(word1)?.iter().copied());
        Some(best_similarity(&dist, targets))
    }

    /// Similarity of `word` against each of `others` with a single
    /// multi-source BFS. `None` if `word` is unmapped; inner `None` for
    /// unmapped entries of `others`.
    pub fn word_similarities<S: AsRef<str>>(&self, word: &str, others: &[S]) -> Option<Vec<Option<f64>>> {
        let dist = self.bfs(self.words.get(word)?.iter().copied());
        Some(
            others
                .iter()
                .map(|o| self.words.get(o.as_ref()).map(|t| best_similarity(&dist, t)))
                .collect(),
        )
    }

    pub fn load(synsets: impl AsRef<Path>, edges: impl AsRef<Path>, mapping: impl AsRef<Path>) -> Result<Self, GraphError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| GraphError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let (sp, ep, mp) = (synsets.as_ref(), edges.as_ref(), mapping.as_ref());
        Self::parse(sp, &read(sp)?, ep, &read(ep)?, mp, &read(mp)?)
    }

    /// Loads `synsets.tsv`, `edges.tsv` and `mapping.tsv` from a directory.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, GraphError> {
        let d = dir.as_ref();
        Self::load(d.join("synsets.tsv"), d.join("edges.tsv"), d.join("mapping.tsv"))
    }

    pub fn parse(
        synsets_path: &Path,
        synsets: &str,
        edges_path: &Path,
        edges: &str,
        mapping_path: &Path,
        mapping: &str,
    ) -> Result<Self, GraphError> {
        let mut g = Self::new();
        let with_line = |path: &Path, line: usize, e: GraphError| GraphError::Malformed {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        };
        for (i, l) in synsets.lines().enumerate() {
            let id = l.trim();
            if id.is_empty() {
                continue;
            }
            g.add_synset(id).map_err(|e| with_line(synsets_path, i + 1, e))?;
        }
        let pairs = |path: &Path, text: &str| -> Result<Vec<(usize, String, String)>, GraphError> {
            let mut out = Vec::new();
            for (i, l) in text.lines().enumerate() {
                if l.trim().is_empty() {
                    continue;
                }
                let (a, b) = l.split_once('\t').ok_or_else(|| GraphError::Malformed {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: "expected two TAB-separated fields".into(),
                })?;
                out.push((i + 1, a.trim().to_string(), b.trim().to_string()));
            }
            Ok(out)
        };
        for (line, a, b) in pairs(edges_path, edges)? {
            g.add_edge(&a, &b).map_err(|e| with_line(edges_path, line, e))?;
        }
        for (line, word, s) in pairs(mapping_path, mapping)? {
            g.map_word(word, &s).map_err(|e| with_line(mapping_path, line, e))?;
        }
        Ok(g)
    }

    /// `(synsets, edges, mapping)` file contents in canonical order.
    pub fn to_tsv(&self) -> (String, String, String) {
        let synsets = self.ids.iter().map(|id| format!("{id}\n")).collect();
        let mut edges = String::new();
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs.iter().filter(|&&j| j > i) {
                edges += &format!("{}\t{}\n", self.ids[i], self.ids[j]);
            }
        }
        let mut mapping = String::new();
        for (w, ss) in &self.words {
            for &s in ss {
                mapping += &format!("{w}\t{}\n", self.ids[s]);
            }
        }
        (synsets, edges, mapping)
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<(), GraphError> {
        let d = dir.as_ref();
        let (s, e, m) = self.to_tsv();
        for (name, body) in [("synsets.tsv", s), ("edges.tsv", e), ("mapping.tsv", m)] {
            let p = d.join(name);
            std::fs::write(&p, body).map_err(|source| GraphError::Io { path: p, source })?;
        }
        Ok(())
    }
}

pub fn similarity_from_distance(d: Option<usize>) -> f64 {
    d.map_or(0.0, |d| 1.0 / (1.0 + d as f64))
}

fn best_similarity(dist: &[Option<usize>], targets: &BTreeSet<usize>) -> f64 {
    similarity_from_distance(targets.iter().filter_map(|&t| dist[t]).min())
}
