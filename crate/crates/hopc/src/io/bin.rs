//! Offset-tracked little-endian readers shared by the binary formats.
//!
//! Every decode failure reports the byte offset it happened at, and float
//! payloads are rejected if they are not finite. Counts are validated
//! against the remaining input before anything is allocated, so a hostile
//! header cannot request an absurd buffer.

use byteorder::{ByteOrder, LittleEndian};

use crate::error::{Error, FormatError, FormatErrorKind, Result};

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn fail(&self, kind: FormatErrorKind) -> Error {
        Error::Format(FormatError::new(self.offset(), kind))
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(self.fail(FormatErrorKind::Truncated {
                what: what.to_string(),
            }));
        }
        let slice = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn magic(&mut self, expected: &'static str) -> Result<()> {
        if self.remaining() < expected.len()
            || &self.buf[self.pos..self.pos + expected.len()] != expected.as_bytes()
        {
            return Err(self.fail(FormatErrorKind::BadMagic { expected }));
        }
        self.pos += expected.len();
        Ok(())
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn flag(&mut self, what: &str) -> Result<bool> {
        match self.u8(what)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Format(FormatError::new(
                self.offset() - 1,
                FormatErrorKind::Invalid(format!("{what}: flag byte must be 0 or 1, got {other}")),
            ))),
        }
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(LittleEndian::read_u32(self.take(4, what)?))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(LittleEndian::read_u64(self.take(8, what)?))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64> {
        let at = self.offset();
        let v = LittleEndian::read_f64(self.take(8, what)?);
        if !v.is_finite() {
            return Err(Error::Format(FormatError::new(
                at,
                FormatErrorKind::NonFinite {
                    what: what.to_string(),
                },
            )));
        }
        Ok(v)
    }

    /// A count field, bounded by how many `elem_bytes`-wide records could
    /// still fit in the input. This makes oversized headers fail fast.
    pub fn count(&mut self, what: &str, elem_bytes: usize) -> Result<usize> {
        let at = self.offset();
        let declared = self.u32(what)? as u64;
        let fits = declared
            .checked_mul(elem_bytes as u64)
            .is_some_and(|bytes| bytes <= self.remaining() as u64);
        if !fits {
            return Err(Error::Format(FormatError::new(
                at,
                FormatErrorKind::Oversized {
                    what: what.to_string(),
                    declared,
                },
            )));
        }
        Ok(declared as usize)
    }

    pub fn f32_vec(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n * 4, what)?;
        let mut out = Vec::with_capacity(n);
        for (i, chunk) in bytes.chunks_exact(4).enumerate() {
            let v = LittleEndian::read_f32(chunk);
            if !v.is_finite() {
                return Err(Error::Format(FormatError::new(
                    self.offset() - (n - i) as u64 * 4,
                    FormatErrorKind::NonFinite {
                        what: what.to_string(),
                    },
                )));
            }
            out.push(v as f64);
        }
        Ok(out)
    }

    pub fn f64_vec(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.take(n * 8, what)?;
        let mut out = Vec::with_capacity(n);
        for (i, chunk) in bytes.chunks_exact(8).enumerate() {
            let v = LittleEndian::read_f64(chunk);
            if !v.is_finite() {
                return Err(Error::Format(FormatError::new(
                    self.offset() - (n - i) as u64 * 8,
                    FormatErrorKind::NonFinite {
                        what: what.to_string(),
                    },
                )));
            }
            out.push(v);
        }
        Ok(out)
    }

    pub fn finish(self) -> Result<()> {
        if self.remaining() > 0 {
            return Err(self.fail(FormatErrorKind::Trailing {
                extra: self.remaining() as u64,
            }));
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

pub(crate) fn put_f32(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&(v as f32).to_le_bytes());
}

pub(crate) fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_f32_slice(out: &mut Vec<u8>, vs: &[f64]) {
    for &v in vs {
        put_f32(out, v);
    }
}

pub(crate) fn put_f64_slice(out: &mut Vec<u8>, vs: &[f64]) {
    for &v in vs {
        put_f64(out, v);
    }
}
