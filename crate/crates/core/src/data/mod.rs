//! Datasets: caption documents, `T2VF` feature files, splits, and a synthetic
//! topic-model generator standing in for real captioned images.

mod captions;
mod features;
mod split;
mod synth;

use std::collections::{HashMap, HashSet};

pub use captions::{load_captions, save_captions, CaptionRecord};
pub use features::{load_features, save_features, FeatureMatrix, FEATURE_MAGIC, FEATURE_VERSION};
pub use split::{split_dataset, DatasetSplit, SplitFractions, SplitIds};
pub use synth::{
    generate_synthetic, load_ground_truth, save_ground_truth, synthetic_words, SynthConfig, SynthDataset,
    TopicAssignment,
};

use crate::error::{Error, Result};

/// An image with its captions and visual feature.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionedImage {
    pub image_id: u64,
    pub captions: Vec<String>,
    pub feature: Vec<f32>,
}

/// Joins caption records with feature rows by image id, keeping caption order.
///
/// Every caption record needs a feature row; feature rows without captions are ignored.
pub fn assemble(records: Vec<CaptionRecord>, features: &FeatureMatrix) -> Result<Vec<CaptionedImage>> {
    let rows: HashMap<u64, usize> = features.ids().iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut seen = HashSet::new();
    records
        .into_iter()
        .map(|rec| {
            if !seen.insert(rec.id) {
                return Err(Error::DuplicateId(rec.id));
            }
            if rec.captions.is_empty() {
                return Err(Error::InvalidArgument(format!("image {} has no captions", rec.id)));
            }
            let row = *rows.get(&rec.id).ok_or(Error::UnknownId(rec.id))?;
            let feature = features.row(row).to_vec();
            if feature.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("feature of image {}", rec.id)));
            }
            if feature.iter().all(|&x| x == 0.0) {
                return Err(Error::ZeroVector { id: Some(rec.id) });
            }
            Ok(CaptionedImage { image_id: rec.id, captions: rec.captions, feature })
        })
        .collect()
}

/// Splits images back into caption records and a feature matrix.
pub fn disassemble(images: &[CaptionedImage]) -> Result<(Vec<CaptionRecord>, FeatureMatrix)> {
    let records =
        images.iter().map(|im| CaptionRecord { id: im.image_id, captions: im.captions.clone() }).collect();
    let ids = images.iter().map(|im| im.image_id).collect();
    let rows: Vec<&[f32]> = images.iter().map(|im| im.feature.as_slice()).collect();
    Ok((records, FeatureMatrix::from_rows(ids, &rows)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, caps: &[&str]) -> CaptionRecord {
        CaptionRecord { id, captions: caps.iter().map(|c| c.to_string()).collect() }
    }

    #[test]
    fn assemble_joins_by_id() {
        let fm = FeatureMatrix::from_rows(vec![5, 9], &[[1.0f32, 0.0], [0.0, 2.0]]).unwrap();
        let ims = assemble(vec![rec(9, &["a dog"]), rec(5, &["a cat"])], &fm).unwrap();
        assert_eq!(ims[0].image_id, 9);
        assert_eq!(ims[0].feature, [0.0, 2.0]);
        assert_eq!(ims[1].feature, [1.0, 0.0]);
        let (recs, fm2) = disassemble(&ims).unwrap();
        assert_eq!(recs[0].id, 9);
        assert_eq!(fm2.ids(), [9, 5]);
    }

    #[test]
    fn assemble_errors() {
        let fm = FeatureMatrix::from_rows(vec![1, 2], &[[1.0f32], [0.0]]).unwrap();
        assert!(matches!(assemble(vec![rec(3, &["x"])], &fm), Err(Error::UnknownId(3))));
        assert!(matches!(assemble(vec![rec(2, &["x"])], &fm), Err(Error::ZeroVector { id: Some(2) })));
        assert!(assemble(vec![rec(1, &[])], &fm).is_err());
        assert!(matches!(assemble(vec![rec(1, &["x"]), rec(1, &["y"])], &fm), Err(Error::DuplicateId(1))));
    }
}
