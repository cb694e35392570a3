use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::CaptionedImage;
use crate::error::{Error, Result};
use crate::nn::Model;
use crate::retrieval::{RankedEntry, RankedList, VisualIndex};
use crate::textvec::TextEncoder;

/// An evaluation query: a caption and the image it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub image_id: u64,
    pub caption: String,
    pub feature: Vec<f32>,
}

/// One query per image, using its first caption.
pub fn queries_from(images: &[CaptionedImage]) -> Result<Vec<Query>> {
    images
        .iter()
        .map(|im| {
            let caption = im
                .captions
                .first()
                .ok_or_else(|| Error::InvalidArgument(format!("image {} has no captions", im.image_id)))?;
            Ok(Query { image_id: im.image_id, caption: caption.clone(), feature: im.feature.clone() })
        })
        .collect()
}

/// Produces a ranking of the index for a query.
pub trait RankingMethod: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Top `k` entries of `index`, never including `exclude`.
    fn rank(&self, query: &Query, index: &VisualIndex, k: usize, exclude: Option<u64>) -> Result<RankedList>;
}

/// `k` ids drawn uniformly without replacement, in random order. Entries carry a NaN
/// distance since no geometry is involved.
pub fn rrank_ranking<R: Rng + ?Sized>(
    ids: &[u64],
    rng: &mut R,
    k: usize,
    exclude: Option<u64>,
) -> Result<RankedList> {
    let mut pool: Vec<u64> = ids.iter().copied().filter(|&id| Some(id) != exclude).collect();
    if k > pool.len() {
        return Err(Error::InvalidArgument(format!("cannot draw {k} ids from {} candidates", pool.len())));
    }
    let (chosen, _) = pool.partial_shuffle(rng, k);
    Ok(RankedList {
        query_id: exclude,
        entries: chosen.iter().map(|&image_id| RankedEntry { image_id, distance: f64::NAN }).collect(),
    })
}

/// Random ranking. Each query gets its own ChaCha stream (keyed by image id) so results do
/// not depend on evaluation order.
#[derive(Debug, Clone, Copy)]
pub struct RRank {
    pub seed: u64,
}

impl RankingMethod for RRank {
    fn name(&self) -> &str {
        "rrank"
    }

    fn rank(&self, query: &Query, index: &VisualIndex, k: usize, exclude: Option<u64>) -> Result<RankedList> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(query.image_id);
        let k = k.min(index.len() - usize::from(exclude.is_some_and(|e| index.ids().contains(&e))));
        let mut list = rrank_ranking(index.ids(), &mut rng, k, exclude)?;
        list.query_id = Some(query.image_id);
        Ok(list)
    }
}

/// Ranks by distance to the query image's own visual feature.
#[derive(Debug, Clone, Copy, Default)]
pub struct VisSim;

impl RankingMethod for VisSim {
    fn name(&self) -> &str {
        "vissim"
    }

    fn rank(&self, query: &Query, index: &VisualIndex, k: usize, exclude: Option<u64>) -> Result<RankedList> {
        let q: Vec<f64> = query.feature.iter().map(|&x| x as f64).collect();
        let mut list = index.query(&q, k, exclude)?;
        list.query_id = Some(query.image_id);
        Ok(list)
    }
}

/// Ranks by distance to the visual vector a trained model predicts from the caption.
#[derive(Debug, Clone)]
pub struct ModelRanker {
    name: String,
    model: Arc<Model>,
    encoder: Arc<TextEncoder>,
}

impl ModelRanker {
    pub fn new(name: impl Into<String>, model: Arc<Model>, encoder: Arc<TextEncoder>) -> Result<Self> {
        if model.vocab_dim() != encoder.vocab().len() {
            return Err(Error::DimensionMismatch {
                context: "model input vs vocabulary size",
                expected: encoder.vocab().len(),
                actual: model.vocab_dim(),
            });
        }
        Ok(Self { name: name.into(), model, encoder })
    }

    pub fn predict(&self, caption: &str) -> Result<Vec<f64>> {
        self.model.predict_visual(&self.encoder.encode(caption))
    }
}

/// Ranks `index` against a predicted vector. An all-zero prediction has no direction, so
/// every candidate is placed at the unit distance from the origin and ties fall back to
/// ascending id.
pub fn rank_prediction(
    index: &VisualIndex,
    prediction: &[f64],
    k: usize,
    exclude: Option<u64>,
) -> Result<RankedList> {
    if prediction.len() == index.dim() && prediction.iter().all(|&x| x == 0.0) {
        let mut ids: Vec<u64> = index.ids().iter().copied().filter(|&id| Some(id) != exclude).collect();
        ids.sort_unstable();
        ids.truncate(k);
        return Ok(RankedList {
            query_id: exclude,
            entries: ids.into_iter().map(|image_id| RankedEntry { image_id, distance: 1.0 }).collect(),
        });
    }
    index.query(prediction, k, exclude)
}

impl RankingMethod for ModelRanker {
    fn name(&self) -> &str {
        &self.name
    }

    fn rank(&self, query: &Query, index: &VisualIndex, k: usize, exclude: Option<u64>) -> Result<RankedList> {
        let prediction = self.predict(&query.caption)?;
        let mut list = rank_prediction(index, &prediction, k, exclude)?;
        list.query_id = Some(query.image_id);
        Ok(list)
    }
}

/// Artifacts ranking methods may be built from.
#[derive(Debug, Clone, Default)]
pub struct MethodContext {
    pub encoder: Option<Arc<TextEncoder>>,
    pub text2vis: Option<Arc<Model>>,
    pub visreg: Option<Arc<Model>>,
    pub seed: u64,
}

type Factory = Box<dyn Fn(&MethodContext) -> Result<Box<dyn RankingMethod>> + Send + Sync>;

/// Name-keyed ranking-method factories.
pub struct MethodRegistry {
    factories: BTreeMap<String, Factory>,
}

impl fmt::Debug for MethodRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MethodRegistry").field("names", &self.names()).finish()
    }
}

impl Default for MethodRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

fn model_method(
    name: &'static str,
    model: &Option<Arc<Model>>,
    ctx: &MethodContext,
) -> Result<Box<dyn RankingMethod>> {
    let model = model.clone().ok_or_else(|| {
        Error::InvalidArgument(format!("method {name} requires a checkpoint that was not supplied"))
    })?;
    let encoder = ctx
        .encoder
        .clone()
        .ok_or_else(|| Error::InvalidArgument(format!("method {name} requires a vocabulary")))?;
    Ok(Box::new(ModelRanker::new(name, model, encoder)?))
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self { factories: BTreeMap::new() }
    }

    /// `text2vis`, `visreg`, `vissim` and `rrank`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("text2vis", |ctx| model_method("text2vis", &ctx.text2vis, ctx));
        r.register("visreg", |ctx| model_method("visreg", &ctx.visreg, ctx));
        r.register("vissim", |_| Ok(Box::new(VisSim)));
        r.register("rrank", |ctx| Ok(Box::new(RRank { seed: ctx.seed })));
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&MethodContext) -> Result<Box<dyn RankingMethod>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_owned(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn create(&self, name: &str, ctx: &MethodContext) -> Result<Box<dyn RankingMethod>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownName {
            kind: "method",
            name: name.to_owned(),
            known: self.names().join(", "),
        })?;
        factory(ctx)
    }
}
