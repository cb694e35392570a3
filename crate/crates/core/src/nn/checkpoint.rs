//! `T2VM` checkpoint files.
//!
//! Layout (little-endian): magic `T2VM`, version `u32`, flags `u32` (bit 0 set when the
//! text head is present), vocab/hidden/visual dims as `u64`, then `W1, b1, [W2, b2], W3, b3`
//! as row-major `f32`.

use std::path::Path;

use super::{Dense, Model, Scalar};
use crate::binio::{self, Reader};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "T2VM";
pub const CHECKPOINT_VERSION: u32 = 1;

const FLAG_TEXT_BRANCH: u32 = 1;

pub fn save_checkpoint<T: Scalar>(model: &Model<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = Vec::with_capacity(32 + 4 * model.param_count());
    out.extend_from_slice(CHECKPOINT_MAGIC.as_bytes());
    binio::put_u32(&mut out, CHECKPOINT_VERSION);
    binio::put_u32(&mut out, if model.has_text_branch() { FLAG_TEXT_BRANCH } else { 0 });
    for d in [model.vocab_dim(), model.hidden(), model.visual_dim()] {
        binio::put_u64(&mut out, d as u64);
    }
    let mut put = |layer: &Dense<T>| {
        binio::put_f32s(&mut out, layer.w.iter().map(|x| x.to_f64() as f32));
        binio::put_f32s(&mut out, layer.b.iter().map(|x| x.to_f64() as f32));
    };
    put(&model.encoder);
    if let Some(head) = &model.text_head {
        put(head);
    }
    put(&model.visual_head);
    binio::write_file(path.as_ref(), &out)
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Model<T>> {
    let path = path.as_ref();
    let bytes = binio::read_file(path)?;
    let mut r = Reader::new(path, &bytes);
    r.expect_magic(CHECKPOINT_MAGIC)?;
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let flags = r.u32("flags")?;
    if flags & !FLAG_TEXT_BRANCH != 0 {
        return Err(Error::format(path, format!("unknown flag bits {flags:#x}")));
    }
    let vocab = r.dim("vocab_dim")?;
    let hidden = r.dim("hidden")?;
    let visual = r.dim("visual_dim")?;
    super::check_dims(vocab, hidden, visual).map_err(|e| Error::format(path, e.to_string()))?;

    let mut read = |rows: usize, cols: usize, name: &str| -> Result<Dense<T>> {
        let n =
            rows.checked_mul(cols).ok_or_else(|| Error::format(path, format!("{name} size overflows")))?;
        let conv = |v: Vec<f32>| v.into_iter().map(|x| T::from_f64(x as f64)).collect();
        Ok(Dense { rows, cols, w: conv(r.f32s(n, name)?), b: conv(r.f32s(rows, name)?) })
    };
    let encoder = read(hidden, vocab, "encoder")?;
    let text_head =
        if flags & FLAG_TEXT_BRANCH != 0 { Some(read(vocab, hidden, "text head")?) } else { None };
    let visual_head = read(visual, hidden, "visual head")?;
    r.finish()?;
    Ok(Model { encoder, text_head, visual_head })
}
