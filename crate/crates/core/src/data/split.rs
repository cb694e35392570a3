use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train/validation/test proportions; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self { train: 0.8, validation: 0.1, test: 0.1 }
    }
}

impl SplitFractions {
    fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::InvalidArgument(format!("split fractions must lie in [0, 1], got {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split fractions must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Image ids of each part of a split, for recording which images a run trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIds {
    pub train: Vec<u64>,
    pub validation: Vec<u64>,
    pub test: Vec<u64>,
}

impl SplitIds {
    pub fn of(split: &DatasetSplit<super::CaptionedImage>) -> Self {
        let ids = |v: &[super::CaptionedImage]| v.iter().map(|im| im.image_id).collect();
        Self { train: ids(&split.train), validation: ids(&split.validation), test: ids(&split.test) }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

/// Seeded shuffle, then consecutive partition. Train and validation sizes are rounded;
/// test takes the remainder.
pub fn split_dataset<T>(items: Vec<T>, fractions: SplitFractions, seed: u64) -> Result<DatasetSplit<T>> {
    fractions.validate()?;
    let n = items.len();
    let n_train = ((fractions.train * n as f64).round() as usize).min(n);
    let n_val = ((fractions.validation * n as f64).round() as usize).min(n - n_train);
    let mut items = items;
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = items.split_off(n_train + n_val);
    let validation = items.split_off(n_train);
    Ok(DatasetSplit { train: items, validation, test })
}
