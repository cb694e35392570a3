use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One entry of a caption document: `{"id": 42, "captions": ["...", ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionRecord {
    pub id: u64,
    pub captions: Vec<String>,
}

/// Reads a JSON array of [`CaptionRecord`]s. Order is preserved; ids must be unique and
/// every record needs at least one caption.
pub fn load_captions(path: impl AsRef<Path>) -> Result<Vec<CaptionRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: Vec<CaptionRecord> =
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    let mut seen = HashSet::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        if !seen.insert(rec.id) {
            return Err(Error::format(path, format!("element {i}: duplicate image id {}", rec.id)));
        }
        if rec.captions.is_empty() {
            return Err(Error::format(
                path,
                format!("element {i}: image {} has an empty captions array", rec.id),
            ));
        }
    }
    Ok(records)
}

pub fn save_captions(path: impl AsRef<Path>, records: &[CaptionRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(records)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
