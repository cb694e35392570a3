//! Exact similarity search over l2-normalized visual vectors.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::error::{Error, Result};

/// `v / ‖v‖₂`.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(if norm == 0.0 {
            Error::ZeroVector { id: None }
        } else {
            Error::NonFinite("vector norm".into())
        });
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedEntry {
    pub image_id: u64,
    pub distance: f64,
}

/// Images ordered by ascending distance, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub query_id: Option<u64>,
    pub entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.image_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ranking order: distance, then image id.
pub fn rank_order(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    a.distance.total_cmp(&b.distance).then(a.image_id.cmp(&b.image_id))
}

/// Immutable collection of unit-norm image vectors.
#[derive(Debug, Clone)]
pub struct VisualIndex {
    ids: Vec<u64>,
    dim: usize,
    vectors: Vec<f32>,
}

impl VisualIndex {
    /// Normalizes every row. Rejects an empty collection, duplicate ids, ragged rows and
    /// zero or non-finite vectors.
    pub fn build<R: AsRef<[f32]>>(ids: Vec<u64>, rows: &[R]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Empty("visual index"));
        }
        if ids.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                context: "index rows vs ids",
                expected: ids.len(),
                actual: rows.len(),
            });
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for &id in &ids {
            if !seen.insert(id) {
                return Err(Error::DuplicateId(id));
            }
        }
        let dim = rows[0].as_ref().len();
        if dim == 0 {
            return Err(Error::InvalidArgument("zero-dimensional vectors".into()));
        }
        let mut vectors = Vec::with_capacity(dim * ids.len());
        for (id, row) in ids.iter().zip(rows) {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "index row",
                    expected: dim,
                    actual: row.len(),
                });
            }
            let as64: Vec<f64> = row.iter().map(|&x| x as f64).collect();
            let unit = l2_normalize(&as64).map_err(|e| match e {
                Error::ZeroVector { .. } => Error::ZeroVector { id: Some(*id) },
                other => other,
            })?;
            vectors.extend(unit.into_iter().map(|x| x as f32));
        }
        Ok(Self { ids, dim, vectors })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Exact top-`k` by Euclidean distance between the normalized query and every stored
    /// row. `exclude_id` is removed from the candidates before ranking.
    pub fn query(&self, q: &[f64], k: usize, exclude_id: Option<u64>) -> Result<RankedList> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "query vector",
                expected: self.dim,
                actual: q.len(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let q = l2_normalize(q)?;
        let mut entries: Vec<RankedEntry> = self
            .ids
            .iter()
            .enumerate()
            .filter(|(_, id)| Some(**id) != exclude_id)
            .map(|(i, &image_id)| {
                let sq: f64 = self
                    .row(i)
                    .iter()
                    .zip(&q)
                    .map(|(&a, b)| {
                        let d = a as f64 - b;
                        d * d
                    })
                    .sum();
                RankedEntry { image_id, distance: sq.sqrt() }
            })
            .collect();
        if k < entries.len() {
            entries.select_nth_unstable_by(k - 1, rank_order);
            entries.truncate(k);
        }
        entries.sort_unstable_by(rank_order);
        Ok(RankedList { query_id: exclude_id, entries })
    }
}
