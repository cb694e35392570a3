use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NGRAM_SEPARATOR;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabMode {
    /// Unigrams only.
    Unigram,
    /// Unigrams plus POS-pattern n-grams.
    #[serde(rename = "ngram")]
    UnigramPlusNgram,
}

impl fmt::Display for VocabMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VocabMode::Unigram => "unigram",
            VocabMode::UnigramPlusNgram => "ngram",
        })
    }
}

impl FromStr for VocabMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unigram" => Ok(VocabMode::Unigram),
            "ngram" => Ok(VocabMode::UnigramPlusNgram),
            other => Err(Error::InvalidArgument(format!(
                "vocabulary mode must be unigram or ngram, got {other:?}"
            ))),
        }
    }
}

/// Caption-frequency thresholds: a term is kept when at least this many distinct
/// captions contain it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub mode: VocabMode,
    pub min_caption_freq_unigram: usize,
    pub min_caption_freq_ngram: usize,
}

impl VocabConfig {
    /// 5 captions for plain unigram vocabularies, 10 for both term kinds when n-grams
    /// are included.
    pub fn for_mode(mode: VocabMode) -> Self {
        match mode {
            VocabMode::Unigram => Self { mode, min_caption_freq_unigram: 5, min_caption_freq_ngram: 5 },
            VocabMode::UnigramPlusNgram => {
                Self { mode, min_caption_freq_unigram: 10, min_caption_freq_ngram: 10 }
            }
        }
    }
}

fn is_ngram(term: &str) -> bool {
    term.contains(NGRAM_SEPARATOR)
}

/// Term to index map. Terms are unique and sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    mode: VocabMode,
}

impl Vocabulary {
    /// Builds a vocabulary from per-caption term lists (as produced by
    /// [`super::caption_terms`]). Terms that are n-grams are ignored in unigram mode.
    pub fn build<S: AsRef<str>>(captions: &[Vec<S>], config: VocabConfig) -> Result<Self> {
        if captions.is_empty() {
            return Err(Error::Empty("caption corpus"));
        }
        let mut caption_freq: BTreeMap<&str, usize> = BTreeMap::new();
        let mut seen = HashSet::new();
        for terms in captions {
            seen.clear();
            for term in terms {
                let term = term.as_ref();
                if seen.insert(term) {
                    *caption_freq.entry(term).or_default() += 1;
                }
            }
        }
        let terms: Vec<String> = caption_freq
            .into_iter()
            .filter(|(term, freq)| {
                if is_ngram(term) {
                    config.mode == VocabMode::UnigramPlusNgram && *freq >= config.min_caption_freq_ngram
                } else {
                    *freq >= config.min_caption_freq_unigram
                }
            })
            .map(|(term, _)| term.to_owned())
            .collect();
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Self::from_sorted(terms, config.mode)
    }

    /// Vocabulary from an explicit term list (kept in the given order). The mode is
    /// inferred from whether any n-gram term is present.
    pub fn from_terms(terms: impl IntoIterator<Item = String>) -> Result<Self> {
        let terms: Vec<String> = terms.into_iter().collect();
        let mode =
            if terms.iter().any(|t| is_ngram(t)) { VocabMode::UnigramPlusNgram } else { VocabMode::Unigram };
        Self::from_sorted(terms, mode)
    }

    fn from_sorted(terms: Vec<String>, mode: VocabMode) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        if terms.len() > u32::MAX as usize {
            return Err(Error::InvalidArgument("vocabulary too large".into()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, term) in terms.iter().enumerate() {
            if term.is_empty() {
                return Err(Error::InvalidArgument(format!("empty term at index {i}")));
            }
            if index.insert(term.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate term {term:?}")));
            }
        }
        Ok(Self { terms, index, mode })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mode(&self) -> VocabMode {
        self.mode
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    /// Binary bag of words: out-of-vocabulary terms are dropped, repeats count once.
    pub fn encode<S: AsRef<str>>(&self, terms: &[S]) -> BowVector {
        let mut on: Vec<u32> = terms.iter().filter_map(|t| self.index_of(t.as_ref())).collect();
        on.sort_unstable();
        on.dedup();
        BowVector { dim: self.len(), on }
    }

    /// One term per line; line number is the index.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for term in &self.terms {
            out.extend_from_slice(term.as_bytes());
            out.push(b'\n');
        }
        std::fs::File::create(path).and_then(|mut f| f.write_all(&out)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut terms = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let term = line.trim_end_matches('\r');
            if term.is_empty() || term.chars().any(char::is_whitespace) {
                return Err(Error::format(path, format!("line {}: invalid term {term:?}", lineno + 1)));
            }
            terms.push(term.to_owned());
        }
        Self::from_terms(terms).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Sparse binary vector: the sorted, deduplicated indices of the ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BowVector {
    dim: usize,
    on: Vec<u32>,
}

impl BowVector {
    pub fn new(dim: usize, mut on: Vec<u32>) -> Result<Self> {
        on.sort_unstable();
        on.dedup();
        if let Some(&last) = on.last() {
            if last as usize >= dim {
                return Err(Error::InvalidArgument(format!("index {last} out of range for dimension {dim}")));
            }
        }
        Ok(Self { dim, on })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[u32] {
        &self.on
    }

    pub fn nnz(&self) -> usize {
        self.on.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &i in &self.on {
            dense[i as usize] = 1.0;
        }
        dense
    }
}
