//! Captions to sparse binary term vectors.
//!
//! Two representations are supported: plain unigrams, and unigrams plus n-grams whose
//! coarse part-of-speech sequence matches one of a fixed set of patterns.

mod pos;
mod tokenize;
mod vocab;

pub use pos::{extract_ngrams, pos_tag, Lexicon, PosTag, Token, NGRAM_PATTERNS, NGRAM_SEPARATOR};
pub use tokenize::tokenize;
pub use vocab::{BowVector, VocabConfig, VocabMode, Vocabulary};

/// Terms of one caption under `mode`, in order of appearance (may repeat).
pub fn caption_terms(text: &str, mode: VocabMode, lexicon: &Lexicon) -> Vec<String> {
    let words = tokenize(text);
    match mode {
        VocabMode::Unigram => words,
        VocabMode::UnigramPlusNgram => {
            let tagged = pos_tag(&words, lexicon);
            let mut terms = words;
            terms.extend(extract_ngrams(&tagged));
            terms
        }
    }
}

/// Caption text to [`BowVector`] for a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct TextEncoder {
    vocab: Vocabulary,
    lexicon: Lexicon,
}

impl TextEncoder {
    pub fn new(vocab: Vocabulary, lexicon: Lexicon) -> Self {
        Self { vocab, lexicon }
    }

    pub fn with_bundled_lexicon(vocab: Vocabulary) -> Self {
        Self::new(vocab, Lexicon::bundled().clone())
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn encode(&self, text: &str) -> BowVector {
        let terms = caption_terms(text, self.vocab.mode(), &self.lexicon);
        self.vocab.encode(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ngram_terms_extend_unigrams() {
        let lex = Lexicon::bundled();
        let uni = caption_terms("A woman cutting a pizza", VocabMode::Unigram, lex);
        assert_eq!(uni, ["a", "woman", "cutting", "a", "pizza"]);
        let both = caption_terms("A woman cutting a pizza", VocabMode::UnigramPlusNgram, lex);
        assert_eq!(&both[..5], &uni[..]);
        assert_eq!(&both[5..], ["woman_cutting"]);
    }

    #[test]
    fn encoder_drops_unknown_terms() {
        let vocab = Vocabulary::from_terms(["a", "cat", "dog"].map(String::from)).unwrap();
        let enc = TextEncoder::with_bundled_lexicon(vocab);
        let bow = enc.encode("A unicorn and a DOG!");
        assert_eq!(bow.indices(), &[0, 2]);
    }
}
