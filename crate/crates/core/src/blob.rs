//! Versioned little-endian binary container shared by all checkpoints.
//!
//! Layout: 8-byte magic `MTAEBLOB`, `u32` format version, then a
//! length-prefixed kind string, then whatever fields the writer appends.
//! Integers are `u64`, floats `f64`, strings and arrays are prefixed with
//! their `u64` length; matrices store `rows`, `cols`, then row-major data.

use crate::error::{Error, Result};
use crate::math::Matrix;

const MAGIC: &[u8; 8] = b"MTAEBLOB";
pub(crate) const VERSION: u32 = 1;

pub(crate) struct BlobWriter {
    buf: Vec<u8>,
}

impl BlobWriter {
    pub(crate) fn new(kind: &str) -> Self {
        let mut w = Self { buf: Vec::new() };
        w.buf.extend_from_slice(MAGIC);
        w.buf.extend_from_slice(&VERSION.to_le_bytes());
        w.str(kind);
        w
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn str(&mut self, s: &str) {
        self.u64(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub(crate) fn floats(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub(crate) fn matrix(&mut self, m: &Matrix) {
        self.u64(m.rows() as u64);
        self.u64(m.cols() as u64);
        for x in m.as_slice() {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub(crate) fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct BlobReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl<'a> BlobReader<'a> {
    /// Checks magic, version and kind.
    pub(crate) fn open(buf: &'a [u8], kind: &str) -> Result<Self> {
        if buf.len() < 12 || &buf[..8] != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(format!("unsupported checkpoint version {version}")));
        }
        let mut r = Self { buf, pos: 12 };
        let found = r.str()?;
        if found != kind {
            return Err(bad(format!("expected a {kind} checkpoint, found {found}")));
        }
        Ok(r)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(Error::Truncated("checkpoint"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::DimensionOverflow)
    }

    pub(crate) fn str(&mut self) -> Result<String> {
        let n = self.usize()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| bad("string field is not UTF-8"))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = n.checked_mul(8).ok_or(Error::DimensionOverflow)?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect())
    }

    pub(crate) fn floats(&mut self) -> Result<Vec<f64>> {
        let n = self.usize()?;
        self.f64s(n)
    }

    pub(crate) fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let n = rows.checked_mul(cols).ok_or(Error::DimensionOverflow)?;
        Matrix::new(rows, cols, self.f64s(n)?)
    }

    pub(crate) fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(bad("trailing bytes after checkpoint payload"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields_round_trip() {
        let m = Matrix::new(2, 2, vec![1.0, -0.5, 1e-310, 3.25]).unwrap();
        let mut w = BlobWriter::new("demo");
        w.u64(7);
        w.str("héllo");
        w.floats(&[0.1, 0.2]);
        w.matrix(&m);
        let bytes = w.finish();
        let mut r = BlobReader::open(&bytes, "demo").unwrap();
        assert_eq!(r.u64().unwrap(), 7);
        assert_eq!(r.str().unwrap(), "héllo");
        assert_eq!(r.floats().unwrap(), vec![0.1, 0.2]);
        assert_eq!(r.matrix().unwrap(), m);
        r.finish().unwrap();
    }

    #[test]
    fn rejects_wrong_kind_and_truncation() {
        let mut w = BlobWriter::new("a");
        w.floats(&[1.0, 2.0]);
        let bytes = w.finish();
        assert!(BlobReader::open(&bytes, "b").is_err());
        let mut r = BlobReader::open(&bytes[..bytes.len() - 3], "a").unwrap();
        assert!(matches!(r.floats(), Err(Error::Truncated(_))));
        assert!(BlobReader::open(b"garbage", "a").is_err());
    }
}
