use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use super::TokenizerError;

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: BTreeMap<char, usize>,
    terminal: bool,
}

/// Character trie over dictionary entries. Every prefix of every entry is a
/// node, so prefix queries and common-prefix scans are a single walk.
#[derive(Debug, Clone)]
pub struct PrefixTrie {
    nodes: Vec<TrieNode>,
}

impl Default for PrefixTrie {
    fn default() -> Self {
        Self {
            nodes: vec![TrieNode::default()],
        }
    }
}

impl PrefixTrie {
    pub fn insert(&mut self, word: &str) {
        let mut node = 0;
        for ch in word.chars() {
            node = match self.nodes[node].children.get(&ch) {
                Some(&next) => next,
                None => {
                    self.nodes.push(TrieNode::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(ch, next);
                    next
                }
            };
        }
        self.nodes[node].terminal = true;
    }

    fn walk(&self, s: &str) -> Option<usize> {
        s.chars()
            .try_fold(0, |node, ch| self.nodes[node].children.get(&ch).copied())
    }

    pub fn is_prefix(&self, s: &str) -> bool {
        self.walk(s).is_some()
    }

    pub fn contains(&self, s: &str) -> bool {
        self.walk(s).is_some_and(|n| self.nodes[n].terminal)
    }

    /// Exclusive end positions `e` such that `chars[start..e]` is an entry.
    pub fn common_prefix_ends(&self, chars: &[char], start: usize) -> Vec<usize> {
        let mut ends = Vec::new();
        let mut node = 0;
        for (offset, ch) in chars[start..].iter().enumerate() {
            match self.nodes[node].children.get(ch) {
                Some(&next) => node = next,
                None => break,
            }
            if self.nodes[node].terminal {
                ends.push(start + offset + 1);
            }
        }
        ends
    }
}

/// Word frequencies plus a prefix index, the prior for max-probability
/// segmentation.
#[derive(Debug, Clone, Default)]
pub struct SegmentationDictionary {
    freqs: HashMap<String, u64>,
    total: u64,
    trie: PrefixTrie,
}

impl SegmentationDictionary {
    pub fn new<I, S>(entries: I) -> Result<Self, TokenizerError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut dict = Self::default();
        for (word, freq) in entries {
            dict.insert(word.into(), freq, Path::new("<memory>"), 0)?;
        }
        Ok(dict)
    }

    fn insert(&mut self, word: String, freq: u64, path: &Path, line: usize) -> Result<(), TokenizerError> {
        let bad = |message: String| TokenizerError::BadDictionary {
            path: path.to_path_buf(),
            line,
            message,
        };
        if word.is_empty() {
            return Err(bad("empty word".into()));
        }
        if freq == 0 {
            return Err(bad(format!("frequency of {word:?} must be positive")));
        }
        if self.freqs.contains_key(&word) {
            return Err(bad(format!("duplicate word {word:?}")));
        }
        self.trie.insert(&word);
        self.total += freq;
        self.freqs.insert(word, freq);
        Ok(())
    }

    /// Parses `word<TAB>frequency` lines. Any further whitespace-separated
    /// columns (e.g. part-of-speech tags) are ignored.
    pub fn parse(path: &Path, text: &str) -> Result<Self, TokenizerError> {
        let mut dict = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(['\t', ' ']).filter(|f| !f.is_empty());
            let word = fields.next().unwrap_or_default().to_string();
            let freq = fields
                .next()
                .and_then(|f| f.trim().parse::<u64>().ok())
                .ok_or_else(|| TokenizerError::BadDictionary {
                    path: path.to_path_buf(),
                    line: line_no,
                    message: "expected `word<TAB>frequency`".into(),
                })?;
            dict.insert(word, freq, path, line_no)?;
        }
        Ok(dict)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TokenizerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: PathBuf::from(path),
            source,
        })?;
        Self::parse(path, &text)
    }

    /// Entries sorted by word, `word<TAB>freq` per line.
    pub fn to_tsv(&self) -> String {
        let mut entries: Vec<_> = self.freqs.iter().collect();
        entries.sort();
        entries
            .into_iter()
            .map(|(w, f)| format!("{w}\t{f}\n"))
            .collect()
    }

    pub fn freq(&self, word: &str) -> Option<u64> {
        self.freqs.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.freqs.contains_key(word)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn is_prefix(&self, s: &str) -> bool {
        self.trie.is_prefix(s)
    }

    pub fn prefix_ends(&self, chars: &[char], start: usize) -> Vec<usize> {
        self.trie.common_prefix_ends(chars, start)
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, u64)> {
        self.freqs.iter().map(|(w, &f)| (w.as_str(), f))
    }
}
