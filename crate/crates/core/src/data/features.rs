//! `T2VF` feature files: magic, version `u32`, N `u64`, D `u64`, N ids as `u64`, then the
//! `N × D` matrix as row-major little-endian `f32`.

use std::collections::HashSet;
use std::path::Path;

use crate::binio::{self, Reader};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &str = "T2VF";
pub const FEATURE_VERSION: u32 = 1;

/// Row-major feature matrix keyed by image id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<u64>,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<u64>, dim: usize, data: Vec<f32>) -> Result<Self> {
        if ids.is_empty() || dim == 0 {
            return Err(Error::Empty("feature matrix"));
        }
        let expected = ids
            .len()
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidArgument("feature matrix size overflows".into()))?;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "feature matrix data",
                expected,
                actual: data.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateId(id));
            }
        }
        Ok(Self { ids, dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(ids: Vec<u64>, rows: &[R]) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                context: "feature rows vs ids",
                expected: ids.len(),
                actual: rows.len(),
            });
        }
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "feature row",
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(ids, dim, data)
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }
}

pub fn save_features(path: impl AsRef<Path>, features: &FeatureMatrix) -> Result<()> {
    let mut out = Vec::with_capacity(24 + 8 * features.len() + 4 * features.data.len());
    out.extend_from_slice(FEATURE_MAGIC.as_bytes());
    binio::put_u32(&mut out, FEATURE_VERSION);
    binio::put_u64(&mut out, features.len() as u64);
    binio::put_u64(&mut out, features.dim as u64);
    for &id in &features.ids {
        binio::put_u64(&mut out, id);
    }
    binio::put_f32s(&mut out, features.data.iter().copied());
    binio::write_file(path.as_ref(), &out)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = binio::read_file(path)?;
    let mut r = Reader::new(path, &bytes);
    r.expect_magic(FEATURE_MAGIC)?;
    let version = r.u32("version")?;
    if version != FEATURE_VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            expected: FEATURE_VERSION,
            found: version,
        });
    }
    let n = r.dim("row count")?;
    let d = r.dim("dimension")?;
    if n == 0 || d == 0 {
        return Err(Error::format(path, "empty feature matrix"));
    }
    let total = n
        .checked_mul(d)
        .filter(|t| t.checked_mul(4).is_some())
        .ok_or_else(|| Error::format(path, format!("dimensions {n} x {d} overflow")))?;
    let ids = r.u64s(n, "ids")?;
    let data = r.f32s(total, "matrix")?;
    r.finish()?;
    FeatureMatrix::new(ids, d, data).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wide_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.t2vf");
        let data: Vec<f32> = (0..3 * 4096).map(|i| (i as f32).sin() * 1e3).collect();
        let fm = FeatureMatrix::new(vec![11, 2, 40], 4096, data).unwrap();
        save_features(&path, &fm).unwrap();
        let back = load_features(&path).unwrap();
        assert_eq!(back.ids(), fm.ids());
        assert!(back.data().iter().zip(fm.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn wrong_magic_names_expected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.t2vf");
        std::fs::write(&path, b"NOPE\x01\x00\x00\x00").unwrap();
        let err = load_features(&path).unwrap_err().to_string();
        assert!(err.contains("\"T2VF\""), "{err}");
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(FeatureMatrix::new(vec![], 4, vec![]).is_err());
        let none: [[f32; 2]; 0] = [];
        assert!(FeatureMatrix::from_rows(vec![], &none).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.t2vf");
        let mut bytes = b"T2VF".to_vec();
        bytes.extend(1u32.to_le_bytes());
        bytes.extend(0u64.to_le_bytes());
        bytes.extend(4u64.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        assert!(load_features(&path).is_err());
    }

    #[test]
    fn truncated_and_overflow() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.t2vf");
        let fm = FeatureMatrix::new(vec![1, 2], 3, vec![1.0; 6]).unwrap();
        save_features(&path, &fm).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(load_features(&path).unwrap_err().to_string().contains("truncated"));

        let mut huge = b"T2VF".to_vec();
        huge.extend(1u32.to_le_bytes());
        huge.extend(u64::MAX.to_le_bytes());
        huge.extend(u64::MAX.to_le_bytes());
        std::fs::write(&path, &huge).unwrap();
        assert!(load_features(&path).is_err());
    }

    #[test]
    fn version_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.t2vf");
        let fm = FeatureMatrix::new(vec![1], 1, vec![1.0]).unwrap();
        save_features(&path, &fm).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 2;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_features(&path), Err(Error::VersionMismatch { found: 2, .. })));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(matches!(FeatureMatrix::new(vec![4, 4], 1, vec![1.0, 2.0]), Err(Error::DuplicateId(4))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_is_bit_exact(
            n in 1usize..6,
            d in 1usize..9,
            bits in prop::collection::vec(any::<u32>(), 54),
        ) {
            let data: Vec<f32> = (0..n * d).map(|i| f32::from_bits(bits[i % bits.len()])).collect();
            let fm = FeatureMatrix::new((0..n as u64).map(|i| i * 31 + 7).collect(), d, data).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("f.t2vf");
            save_features(&path, &fm).unwrap();
            let back = load_features(&path).unwrap();
            prop_assert_eq!(back.ids(), fm.ids());
            prop_assert!(back.data().iter().zip(fm.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }
}
