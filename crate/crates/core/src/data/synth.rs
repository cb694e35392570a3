//! Latent-topic synthetic captioned images.
//!
//! Each topic owns a block of words and a non-negative visual prototype. An image draws a
//! few topics; its feature is `ReLU(mean of prototypes + noise)` and each caption draws
//! words from the image's topics. Caption overlap therefore tracks feature proximity, which
//! is what text-to-image retrieval needs to be testable without real images.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::CaptionedImage;
use crate::error::{Error, Result};
use crate::textvec::{Lexicon, PosTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_topics: usize,
    pub vocab_size: usize,
    pub visual_dim: usize,
    pub images: usize,
    pub captions_per_image: usize,
    /// Inclusive word count range of a caption.
    pub caption_length: (usize, usize),
    /// Inclusive range of topics drawn per image.
    pub topics_per_image: (usize, usize),
    pub noise_sigma: f64,
    /// Probability that a caption word comes from its topic's own word block rather than
    /// the whole vocabulary.
    pub topic_word_focus: f64,
    /// Probability of inserting a function word (article/preposition) at each position.
    pub function_word_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_topics: 10,
            vocab_size: 200,
            visual_dim: 64,
            images: 2000,
            captions_per_image: 5,
            caption_length: (8, 12),
            topics_per_image: (1, 3),
            noise_sigma: 0.5,
            topic_word_focus: 0.9,
            function_word_rate: 0.15,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_topics", self.num_topics),
            ("vocab_size", self.vocab_size),
            ("visual_dim", self.visual_dim),
            ("images", self.images),
            ("captions_per_image", self.captions_per_image),
            ("caption_length min", self.caption_length.0),
            ("topics_per_image min", self.topics_per_image.0),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if self.caption_length.0 > self.caption_length.1 {
            return Err(Error::InvalidArgument("caption_length range is empty".into()));
        }
        if self.topics_per_image.0 > self.topics_per_image.1 {
            return Err(Error::InvalidArgument("topics_per_image range is empty".into()));
        }
        if self.topics_per_image.0 > self.num_topics {
            return Err(Error::InvalidArgument("topics_per_image minimum exceeds num_topics".into()));
        }
        if self.vocab_size < self.num_topics {
            return Err(Error::InvalidArgument("vocab_size must be at least num_topics".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument("noise_sigma must be finite and >= 0".into()));
        }
        for (name, p) in
            [("topic_word_focus", self.topic_word_focus), ("function_word_rate", self.function_word_rate)]
        {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Ground-truth topics of one synthetic image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub id: u64,
    pub topics: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub images: Vec<CaptionedImage>,
    pub topics: Vec<TopicAssignment>,
    /// Words owned by each topic.
    pub topic_words: Vec<Vec<String>>,
    /// Noise-free visual prototype of each topic.
    pub prototypes: Vec<Vec<f32>>,
}

const FUNCTION_WORDS: [&str; 6] = ["a", "the", "on", "with", "of", "in"];

/// Content words for a synthetic vocabulary of `n` words, taken from the bundled lexicon
/// in a repeating noun/verb/adjective pattern so that POS-pattern n-grams occur. Falls back
/// to `termNNN` tokens once a tag runs out.
pub fn synthetic_words(n: usize) -> Vec<String> {
    use PosTag::{Adj, Noun, Verb};
    const CYCLE: [PosTag; 10] = [Noun, Noun, Verb, Adj, Noun, Verb, Noun, Adj, Verb, Noun];
    let lex = Lexicon::bundled();
    let mut pools: Vec<(PosTag, std::vec::IntoIter<&str>)> =
        [Noun, Verb, Adj].into_iter().map(|t| (t, lex.words_with_tag(t).into_iter())).collect();
    (0..n)
        .map(|i| {
            let tag = CYCLE[i % CYCLE.len()];
            let pool = &mut pools.iter_mut().find(|(t, _)| *t == tag).expect("pool").1;
            pool.next().map(str::to_owned).unwrap_or_else(|| format!("term{i:04}"))
        })
        .collect()
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = config.num_topics;
    let words = synthetic_words(config.vocab_size);
    let block = config.vocab_size / k;
    let topic_words: Vec<Vec<String>> = (0..k)
        .map(|t| {
            let end = if t + 1 == k { config.vocab_size } else { (t + 1) * block };
            words[t * block..end].to_vec()
        })
        .collect();

    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let prototypes: Vec<Vec<f32>> = (0..k)
        .map(|_| (0..config.visual_dim).map(|_| (unit.sample(&mut rng) as f32).max(0.0)).collect())
        .collect();

    let max_topics = config.topics_per_image.1.min(k);
    let mut images = Vec::with_capacity(config.images);
    let mut topics = Vec::with_capacity(config.images);
    for image_id in 0..config.images as u64 {
        let count = rng.random_range(config.topics_per_image.0..=max_topics);
        let chosen: BTreeSet<usize> = index::sample(&mut rng, k, count).into_iter().collect();
        let chosen: Vec<usize> = chosen.into_iter().collect();

        let mean: Vec<f64> = (0..config.visual_dim)
            .map(|d| chosen.iter().map(|&t| prototypes[t][d] as f64).sum::<f64>() / count as f64)
            .collect();
        let feature = loop {
            let f: Vec<f32> = mean
                .iter()
                .map(|m| {
                    let noise = if config.noise_sigma > 0.0 {
                        config.noise_sigma * unit.sample(&mut rng)
                    } else {
                        0.0
                    };
                    (m + noise).max(0.0) as f32
                })
                .collect();
            if f.iter().any(|&x| x > 0.0) {
                break f;
            }
            if config.noise_sigma == 0.0 {
                return Err(Error::InvalidArgument(
                    "a topic prototype is all zero; use noise or another seed".into(),
                ));
            }
        };

        let captions = (0..config.captions_per_image)
            .map(|_| {
                let len = rng.random_range(config.caption_length.0..=config.caption_length.1);
                let mut caption: Vec<&str> = Vec::with_capacity(len * 2);
                for _ in 0..len {
                    if rng.random_bool(config.function_word_rate) {
                        caption.push(FUNCTION_WORDS[rng.random_range(0..FUNCTION_WORDS.len())]);
                    }
                    let topic = chosen[rng.random_range(0..chosen.len())];
                    let word = if rng.random_bool(config.topic_word_focus) {
                        let own = &topic_words[topic];
                        &own[rng.random_range(0..own.len())]
                    } else {
                        &words[rng.random_range(0..words.len())]
                    };
                    caption.push(word);
                }
                caption.join(" ")
            })
            .collect();

        images.push(CaptionedImage { image_id, captions, feature });
        topics.push(TopicAssignment { id: image_id, topics: chosen });
    }
    Ok(SynthDataset { images, topics, topic_words, prototypes })
}

pub fn save_ground_truth(path: impl AsRef<Path>, topics: &[TopicAssignment]) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(topics)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Vec<TopicAssignment>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
