//! Standalone codebook container (`HOPCCDBK`): the clustering output that
//! the training command consumes. Stored in f64 so a file-based training
//! run matches an in-process one exactly.

use std::path::Path;

use crate::error::{Error, FormatError, FormatErrorKind, Result};
use crate::io::bin::{put_f64_slice, put_u32, put_u64, ByteReader};
use crate::pipeline::Codebook;

pub const CODEBOOK_MAGIC: &str = "HOPCCDBK";
pub const CODEBOOK_VERSION: u32 = 1;

pub fn codebook_to_bytes(cb: &Codebook) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CODEBOOK_MAGIC.as_bytes());
    put_u32(&mut out, CODEBOOK_VERSION);
    put_u64(&mut out, cb.seed);
    put_u32(&mut out, cb.k() as u32);
    put_u32(&mut out, cb.dim() as u32);
    for c in &cb.centroids {
        put_f64_slice(&mut out, c);
    }
    for &keep in &cb.keep_mask {
        out.push(keep as u8);
    }
    out
}

pub fn codebook_from_bytes(buf: &[u8]) -> Result<Codebook> {
    let mut r = ByteReader::new(buf);
    r.magic(CODEBOOK_MAGIC)?;
    let at = r.offset();
    let version = r.u32("version")?;
    if version != CODEBOOK_VERSION {
        return Err(Error::Format(FormatError::new(
            at,
            FormatErrorKind::Version {
                found: version,
                expected: CODEBOOK_VERSION,
            },
        )));
    }
    let seed = r.u64("seed")?;
    let at = r.offset();
    let k = r.u32("codeword count")? as u64;
    let dim = r.u32("descriptor dimension")? as u64;
    let body = k
        .checked_mul(dim)
        .and_then(|v| v.checked_mul(8))
        .and_then(|v| v.checked_add(k));
    if k == 0 || dim == 0 || !body.is_some_and(|b| b <= r.remaining() as u64) {
        return Err(Error::Format(FormatError::new(
            at,
            FormatErrorKind::Oversized {
                what: "codebook".into(),
                declared: k,
            },
        )));
    }
    let mut centroids = Vec::with_capacity(k as usize);
    for _ in 0..k {
        centroids.push(r.f64_vec(dim as usize, "centroid")?);
    }
    let mut keep_mask = Vec::with_capacity(k as usize);
    for _ in 0..k {
        keep_mask.push(r.flag("keep flag")?);
    }
    if !keep_mask.iter().any(|&m| m) {
        return Err(r.fail(FormatErrorKind::Invalid(
            "codebook keeps no codewords".into(),
        )));
    }
    r.finish()?;
    Ok(Codebook {
        centroids,
        keep_mask,
        seed,
    })
}

pub fn save_codebook(path: &Path, cb: &Codebook) -> Result<()> {
    Ok(std::fs::write(path, codebook_to_bytes(cb))?)
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    codebook_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Codebook {
        Codebook {
            centroids: vec![vec![0.1, 0.2, 0.3], vec![-1.5, 0.0, 2.25]],
            keep_mask: vec![true, false],
            seed: 99,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let cb = sample();
        let bytes = codebook_to_bytes(&cb);
        let back = codebook_from_bytes(&bytes).unwrap();
        assert_eq!(back, cb);
        assert_eq!(codebook_to_bytes(&back), bytes);
    }

    #[test]
    fn every_prefix_fails_cleanly() {
        let bytes = codebook_to_bytes(&sample());
        for len in 0..bytes.len() {
            assert!(codebook_from_bytes(&bytes[..len]).is_err());
        }
    }

    #[test]
    fn all_masked_out_rejected() {
        let mut cb = sample();
        cb.keep_mask = vec![false, false];
        assert!(codebook_from_bytes(&codebook_to_bytes(&cb)).is_err());
    }

    #[test]
    fn trailing_rejected() {
        let mut bytes = codebook_to_bytes(&sample());
        bytes.push(1);
        assert!(matches!(
            codebook_from_bytes(&bytes),
            Err(Error::Format(FormatError {
                kind: FormatErrorKind::Trailing { extra: 1 },
                ..
            }))
        ));
    }
}
