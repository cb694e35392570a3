use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Coarse part-of-speech tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Prt,
    Num,
    Other,
}

impl PosTag {
    /// Maps a (possibly fine-grained) tag name onto the coarse set. Unrecognized tags
    /// become [`PosTag::Other`].
    pub fn from_tag_name(name: &str) -> Self {
        match name.trim().to_ascii_uppercase().as_str() {
            "NOUN" | "PROPN" | "NN" | "NNS" | "NNP" | "NNPS" => PosTag::Noun,
            "VERB" | "AUX" | "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" => PosTag::Verb,
            "ADJ" | "JJ" | "JJR" | "JJS" => PosTag::Adj,
            "PRT" | "PART" | "RP" => PosTag::Prt,
            "NUM" | "CD" => PosTag::Num,
            _ => PosTag::Other,
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Prt => "PRT",
            PosTag::Num => "NUM",
            PosTag::Other => "OTHER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: PosTag,
}

/// The n-gram tag sequences that become vocabulary terms.
pub const NGRAM_PATTERNS: [&[PosTag]; 7] = [
    &[PosTag::Noun, PosTag::Verb],
    &[PosTag::Noun, PosTag::Verb, PosTag::Verb],
    &[PosTag::Adj, PosTag::Noun],
    &[PosTag::Verb, PosTag::Prt],
    &[PosTag::Verb, PosTag::Verb],
    &[PosTag::Num, PosTag::Noun],
    &[PosTag::Noun, PosTag::Noun],
];

/// Joins the surfaces of an n-gram term. Tokenization never produces it, so n-gram terms
/// can not collide with unigrams.
pub const NGRAM_SEPARATOR: char = '_';

const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Word to coarse tag lookup, one most-frequent tag per word.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    tags: HashMap<String, PosTag>,
}

impl Lexicon {
    /// The lexicon shipped with the crate.
    pub fn bundled() -> &'static Lexicon {
        static LEXICON: OnceLock<Lexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            Lexicon::parse(BUNDLED_LEXICON, Path::new("<bundled lexicon>"))
                .expect("bundled lexicon is well-formed")
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses `word<TAB>TAG` lines. Blank lines and `#` comments are skipped; the first
    /// entry for a word wins.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut tags = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line.split_once('\t').ok_or_else(|| {
                Error::format(origin, format!("line {}: expected word<TAB>TAG", lineno + 1))
            })?;
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                return Err(Error::format(origin, format!("line {}: empty word", lineno + 1)));
            }
            tags.entry(word).or_insert_with(|| PosTag::from_tag_name(tag));
        }
        Ok(Self { tags })
    }

    pub fn tag(&self, word: &str) -> PosTag {
        self.tags.get(word).copied().unwrap_or(PosTag::Other)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    /// Words carrying `tag`, sorted.
    pub fn words_with_tag(&self, tag: PosTag) -> Vec<&str> {
        let mut words: Vec<&str> =
            self.tags.iter().filter(|(_, t)| **t == tag).map(|(w, _)| w.as_str()).collect();
        words.sort_unstable();
        words
    }
}

pub fn pos_tag(words: &[String], lexicon: &Lexicon) -> Vec<Token> {
    words.iter().map(|w| Token { surface: w.clone(), pos: lexicon.tag(w) }).collect()
}

/// Every contiguous window whose tag sequence is one of [`NGRAM_PATTERNS`], joined with
/// [`NGRAM_SEPARATOR`]. Windows may overlap; output is ordered by start position, then
/// pattern order.
pub fn extract_ngrams(tagged: &[Token]) -> Vec<String> {
    let mut out = Vec::new();
    for start in 0..tagged.len() {
        for pattern in NGRAM_PATTERNS {
            let end = start + pattern.len();
            if end > tagged.len() {
                continue;
            }
            let window = &tagged[start..end];
            if window.iter().zip(pattern.iter()).all(|(t, p)| t.pos == *p) {
                let joined: Vec<&str> = window.iter().map(|t| t.surface.as_str()).collect();
                out.push(joined.join(&NGRAM_SEPARATOR.to_string()));
            }
        }
    }
    out
}
