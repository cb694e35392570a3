//! Little-endian helpers shared by the checkpoint and feature file formats.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub(crate) struct Reader<'a> {
    path: PathBuf,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(path: &Path, buf: &'a [u8]) -> Self {
        Self { path: path.to_path_buf(), buf, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::format(&self.path, format!("truncated file while reading {what} at byte {}", self.pos))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn expect_magic(&mut self, magic: &'static str) -> Result<()> {
        let got = self
            .take(magic.len(), "magic")
            .map_err(|_| Error::BadMagic { path: self.path.clone(), expected: magic })?;
        if got != magic.as_bytes() {
            return Err(Error::BadMagic { path: self.path.clone(), expected: magic });
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    /// Reads a count that must fit in memory-addressable sizes.
    pub(crate) fn dim(&mut self, what: &str) -> Result<usize> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| Error::format(&self.path, format!("{what} {v} overflows")))
    }

    pub(crate) fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let bytes =
            n.checked_mul(4).ok_or_else(|| Error::format(&self.path, format!("{what} size overflows")))?;
        let b = self.take(bytes, what)?;
        Ok(b.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }

    pub(crate) fn u64s(&mut self, n: usize, what: &str) -> Result<Vec<u64>> {
        let bytes =
            n.checked_mul(8).ok_or_else(|| Error::format(&self.path, format!("{what} size overflows")))?;
        let b = self.take(bytes, what)?;
        Ok(b.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(&self.path, format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f32s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f32>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
