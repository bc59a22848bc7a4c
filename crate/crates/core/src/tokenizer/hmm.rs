use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use super::TokenizerError;

/// Log-probability assigned to characters absent from an emission table.
pub const EMISSION_FLOOR: f64 = -18.420680743952367; // ln(1e-8)

/// Per-character word-position tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    B = 0,
    M = 1,
    E = 2,
    S = 3,
}

impl Tag {
    pub const ALL: [Tag; 4] = [Tag::B, Tag::M, Tag::E, Tag::S];

    fn from_char(c: char) -> Option<Tag> {
        match c {
            'B' => Some(Tag::B),
            'M' => Some(Tag::M),
            'E' => Some(Tag::E),
            'S' => Some(Tag::S),
            _ => None,
        }
    }

    /// Whether `next` may follow `self` in a well-formed tag sequence.
    pub fn may_precede(self, next: Tag) -> bool {
        matches!(
            (self, next),
            (Tag::B, Tag::M | Tag::E) | (Tag::M, Tag::M | Tag::E) | (Tag::E | Tag::S, Tag::B | Tag::S)
        )
    }

    pub fn may_start(self) -> bool {
        matches!(self, Tag::B | Tag::S)
    }

    pub fn may_end(self) -> bool {
        matches!(self, Tag::E | Tag::S)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Tag::B => 'B',
            Tag::M => 'M',
            Tag::E => 'E',
            Tag::S => 'S',
        };
        write!(f, "{c}")
    }
}

/// Whether a tag sequence decodes to well-formed words.
pub fn is_valid_tagging(tags: &[Tag]) -> bool {
    match (tags.first(), tags.last()) {
        (Some(first), Some(last)) => {
            first.may_start()
                && last.may_end()
                && tags.windows(2).all(|w| w[0].may_precede(w[1]))
        }
        _ => true,
    }
}

/// Four-state BMES hidden Markov model in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmParams {
    initial: [f64; 4],
    transition: [[f64; 4]; 4],
    emission: [HashMap<char, f64>; 4],
}

impl HmmParams {
    /// Builds parameters, forcing structurally impossible starts and
    /// transitions to −∞. Finite values in those slots are rejected.
    pub fn new(
        initial: [f64; 4],
        transition: [[f64; 4]; 4],
        emission: [HashMap<char, f64>; 4],
    ) -> Result<Self, TokenizerError> {
        for t in Tag::ALL {
            if !t.may_start() && initial[t as usize] != f64::NEG_INFINITY {
                return Err(TokenizerError::BadHmm(format!("initial state {t} must be -inf")));
            }
            for u in Tag::ALL {
                if !t.may_precede(u) && transition[t as usize][u as usize] != f64::NEG_INFINITY {
                    return Err(TokenizerError::BadHmm(format!("transition {t}{u} must be -inf")));
                }
            }
        }
        let params = Self {
            initial,
            transition,
            emission,
        };
        if params
            .initial
            .iter()
            .chain(params.transition.iter().flatten())
            .chain(params.emission.iter().flat_map(|e| e.values()))
            .any(|v| v.is_nan() || *v == f64::INFINITY)
        {
            return Err(TokenizerError::BadHmm("log-probabilities must not be NaN or +inf".into()));
        }
        Ok(params)
    }

    pub fn initial(&self, t: Tag) -> f64 {
        self.initial[t as usize]
    }

    pub fn transition(&self, from: Tag, to: Tag) -> f64 {
        self.transition[from as usize][to as usize]
    }

    pub fn emission(&self, t: Tag, ch: char) -> f64 {
        self.emission[t as usize]
            .get(&ch)
            .copied()
            .unwrap_or(EMISSION_FLOOR)
    }

    /// Checks that every distribution exponentiates to a sum of 1 within
    /// `tolerance`. Empty emission tables are skipped.
    pub fn validate(&self, tolerance: f64) -> Result<(), TokenizerError> {
        let check = |name: String, logs: &mut dyn Iterator<Item = f64>| {
            let sum: f64 = logs.map(f64::exp).sum();
            if (sum - 1.0).abs() > tolerance {
                Err(TokenizerError::BadHmm(format!("{name} sums to {sum}, expected 1")))
            } else {
                Ok(())
            }
        };
        check("initial distribution".into(), &mut self.initial.iter().copied())?;
        for t in Tag::ALL {
            check(format!("transitions from {t}"), &mut self.transition[t as usize].iter().copied())?;
            if !self.emission[t as usize].is_empty() {
                check(format!("emissions of {t}"), &mut self.emission[t as usize].values().copied())?;
            }
        }
        Ok(())
    }

    /// Parses `[initial]`, `[transition]` and `[emission]` sections of
    /// `key<TAB>log_prob` lines. Keys are `B`, `BE` and `B字` respectively.
    /// Missing keys default to −∞; `#` starts a comment line.
    pub fn parse(path: &Path, text: &str) -> Result<Self, TokenizerError> {
        let mut initial = [f64::NEG_INFINITY; 4];
        let mut transition = [[f64::NEG_INFINITY; 4]; 4];
        let mut emission: [HashMap<char, f64>; 4] = Default::default();
        let mut section = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |message: &str| TokenizerError::BadHmmFile {
                path: path.to_path_buf(),
                line: line_no,
                message: message.to_string(),
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(name) = trimmed.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = Some(match name {
                    "initial" => 0,
                    "transition" => 1,
                    "emission" => 2,
                    _ => return Err(bad("unknown section")),
                });
                continue;
            }
            let (key, value) = line.split_once('\t').ok_or_else(|| bad("expected `key<TAB>log_prob`"))?;
            let value: f64 = match value.trim() {
                "-inf" => f64::NEG_INFINITY,
                v => v.parse().map_err(|_| bad("invalid log-probability"))?,
            };
            let mut key_chars = key.chars();
            let state = key_chars
                .next()
                .and_then(Tag::from_char)
                .ok_or_else(|| bad("key must start with B, M, E or S"))?;
            let rest: Vec<char> = key_chars.collect();
            match (section, rest.as_slice()) {
                (Some(0), []) => initial[state as usize] = value,
                (Some(1), [to]) => {
                    let to = Tag::from_char(*to).ok_or_else(|| bad("transition target must be B, M, E or S"))?;
                    transition[state as usize][to as usize] = value;
                }
                (Some(2), [ch]) => {
                    emission[state as usize].insert(*ch, value);
                }
                (None, _) => return Err(bad("entry outside of a section")),
                _ => return Err(bad("malformed key for this section")),
            }
        }
        Self::new(initial, transition, emission)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TokenizerError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: PathBuf::from(path),
            source,
        })?;
        let params = Self::parse(path, &text)?;
        // exported tables are typically rounded
        params.validate(1e-6)?;
        Ok(params)
    }

    pub fn to_text(&self) -> String {
        let fmt = |v: f64| if v == f64::NEG_INFINITY { "-inf".to_string() } else { format!("{v:?}") };
        let mut out = String::from("[initial]\n");
        for t in Tag::ALL {
            out += &format!("{t}\t{}\n", fmt(self.initial(t)));
        }
        out += "[transition]\n";
        for t in Tag::ALL {
            for u in Tag::ALL {
                out += &format!("{t}{u}\t{}\n", fmt(self.transition(t, u)));
            }
        }
        out += "[emission]\n";
        for t in Tag::ALL {
            let mut entries: Vec<_> = self.emission[t as usize].iter().collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            for (ch, v) in entries {
                out += &format!("{t}{ch}\t{}\n", fmt(*v));
            }
        }
        out
    }
}

/// Log-probability of a tag sequence for `span` under `hmm`.
pub fn path_log_prob(span: &[char], tags: &[Tag], hmm: &HmmParams) -> f64 {
    let mut lp = 0.0;
    for (i, (&ch, &t)) in span.iter().zip(tags).enumerate() {
        lp += if i == 0 {
            hmm.initial(t)
        } else {
            hmm.transition(tags[i - 1], t)
        };
        lp += hmm.emission(t, ch);
    }
    lp
}

/// Most probable well-formed BMES tagging of `span`. Ties are broken by the
/// fixed state order B, M, E, S, which favours longer words.
pub fn viterbi_bmes(span: &[char], hmm: &HmmParams) -> Vec<Tag> {
    let n = span.len();
    if n == 0 {
        return Vec::new();
    }
    let mut score = vec![[f64::NEG_INFINITY; 4]; n];
    let mut back = vec![[0usize; 4]; n];
    for t in Tag::ALL {
        score[0][t as usize] = hmm.initial(t) + hmm.emission(t, span[0]);
    }
    for i in 1..n {
        for t in Tag::ALL {
            let mut best = f64::NEG_INFINITY;
            let mut arg = None;
            for p in Tag::ALL {
                if !p.may_precede(t) {
                    continue;
                }
                let s = score[i - 1][p as usize] + hmm.transition(p, t);
                if arg.is_none() || s > best {
                    best = s;
                    arg = Some(p);
                }
            }
            score[i][t as usize] = best + hmm.emission(t, span[i]);
            back[i][t as usize] = arg.map_or(0, |p| p as usize);
        }
    }
    let last = if score[n - 1][Tag::S as usize] > score[n - 1][Tag::E as usize] || n == 1 {
        Tag::S
    } else {
        Tag::E
    };
    if score[n - 1][last as usize] == f64::NEG_INFINITY {
        // no finite path; degenerate parameters
        return vec![Tag::S; n];
    }
    let mut tags = vec![last; n];
    for i in (1..n).rev() {
        tags[i - 1] = Tag::ALL[back[i][tags[i] as usize]];
    }
    tags
}

/// Splits `span` into words according to `tags`.
pub fn decode_tags(span: &[char], tags: &[Tag]) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for (&ch, &t) in span.iter().zip(tags) {
        if matches!(t, Tag::B | Tag::S) && !current.is_empty() {
            words.push(std::mem::take(&mut current));
        }
        current.push(ch);
        if matches!(t, Tag::E | Tag::S) {
            words.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}
