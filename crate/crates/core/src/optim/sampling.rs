use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::CaptionedImage;
use crate::error::{Error, Result};
use crate::textvec::{BowVector, TextEncoder};

/// An image whose captions are already encoded as bag-of-words vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedImage {
    pub image_id: u64,
    pub captions: Vec<BowVector>,
    pub feature: Vec<f32>,
}

impl EncodedImage {
    pub fn encode(image: &CaptionedImage, encoder: &TextEncoder) -> Result<Self> {
        if image.captions.is_empty() {
            return Err(Error::InvalidArgument(format!("image {} has no captions", image.image_id)));
        }
        Ok(Self {
            image_id: image.image_id,
            captions: image.captions.iter().map(|c| encoder.encode(c)).collect(),
            feature: image.feature.clone(),
        })
    }
}

/// Encodes every image; dimensions are checked once here so the trainers can assume them.
pub fn encode_images(images: &[CaptionedImage], encoder: &TextEncoder) -> Result<Vec<EncodedImage>> {
    let encoded: Vec<EncodedImage> =
        images.iter().map(|im| EncodedImage::encode(im, encoder)).collect::<Result<_>>()?;
    if let Some(first) = encoded.first() {
        let dim = first.feature.len();
        if let Some(bad) = encoded.iter().find(|e| e.feature.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "visual feature",
                expected: dim,
                actual: bad.feature.len(),
            });
        }
    }
    Ok(encoded)
}

/// One training instance: input caption, reconstruction target, and visual target.
#[derive(Debug, Clone, Copy)]
pub struct TrainTriple<'a> {
    pub t_in: &'a BowVector,
    pub t_out: &'a BowVector,
    pub v: &'a [f32],
}

/// Independent uniform indices `(in, out)` into `n` captions; equal indices are allowed.
pub fn sample_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::Empty("caption set"));
    }
    Ok((rng.random_range(0..n), rng.random_range(0..n)))
}

pub fn sample_triple<'a, R: Rng + ?Sized>(image: &'a EncodedImage, rng: &mut R) -> Result<TrainTriple<'a>> {
    let (i, o) = sample_pair(image.captions.len(), rng)?;
    Ok(TrainTriple { t_in: &image.captions[i], t_out: &image.captions[o], v: &image.feature })
}

/// Walks a shuffled order of image indices, reshuffling after every complete pass.
#[derive(Debug, Clone)]
pub struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
    passes: u64,
}

impl BatchSampler {
    pub fn new<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("training set"));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        Ok(Self { order, cursor: 0, passes: 0 })
    }

    /// Completed passes over the data.
    pub fn passes(&self) -> u64 {
        self.passes
    }

    pub fn next_index<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        if self.cursor == self.order.len() {
            self.order.shuffle(rng);
            self.cursor = 0;
            self.passes += 1;
        }
        self.cursor += 1;
        self.order[self.cursor - 1]
    }

    /// Next `size` image indices followed by one triple per index.
    pub fn next_batch<'a, R: Rng + ?Sized>(
        &mut self,
        images: &'a [EncodedImage],
        size: usize,
        rng: &mut R,
    ) -> Result<Vec<TrainTriple<'a>>> {
        (0..size)
            .map(|_| {
                let i = self.next_index(rng);
                sample_triple(&images[i], rng)
            })
            .collect()
    }
}
