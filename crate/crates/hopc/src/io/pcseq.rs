//! The `PCSQ` pointcloud sequence container.
//!
//! Layout, all little-endian: 4-byte magic `PCSQ`, `u32` version (1),
//! `u32` frame count, then per frame a `u32` point count followed by
//! `count * 3` f32 coordinates. Frames are stored in temporal order and
//! numbered 1..n on load. Coordinates are quantized to f32 on save, so a
//! file re-saved after loading is byte-identical.

use std::path::Path;

use crate::error::Result;
use crate::geom::{Point3, PointCloudSequence};
use crate::io::bin::{put_f32, put_u32, ByteReader};

pub const PCSEQ_MAGIC: &str = "PCSQ";
pub const PCSEQ_VERSION: u32 = 1;

pub fn to_bytes(seq: &PointCloudSequence) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PCSEQ_MAGIC.as_bytes());
    put_u32(&mut out, PCSEQ_VERSION);
    put_u32(&mut out, seq.n_frames() as u32);
    for frame in &seq.frames {
        put_u32(&mut out, frame.points.len() as u32);
        for p in &frame.points {
            put_f32(&mut out, p.x);
            put_f32(&mut out, p.y);
            put_f32(&mut out, p.z);
        }
    }
    out
}

pub fn from_bytes(buf: &[u8]) -> Result<PointCloudSequence> {
    let mut r = ByteReader::new(buf);
    r.magic(PCSEQ_MAGIC)?;
    let at = r.offset();
    let version = r.u32("version")?;
    if version != PCSEQ_VERSION {
        return Err(crate::error::Error::Format(crate::error::FormatError::new(
            at,
            crate::error::FormatErrorKind::Version {
                found: version,
                expected: PCSEQ_VERSION,
            },
        )));
    }
    let n_frames = r.count("frame count", 4)?;
    let mut frames = Vec::with_capacity(n_frames);
    for i in 0..n_frames {
        let count = r.count(&format!("frame {} point count", i + 1), 12)?;
        let coords = r.f32_vec(3 * count, &format!("frame {} points", i + 1))?;
        let points: Vec<Point3> = coords
            .chunks_exact(3)
            .map(|c| Point3::new(c[0], c[1], c[2]))
            .collect();
        frames.push(points);
    }
    r.finish()?;
    Ok(PointCloudSequence::from_points(frames))
}

pub fn save_pcseq(path: &Path, seq: &PointCloudSequence) -> Result<()> {
    Ok(std::fs::write(path, to_bytes(seq))?)
}

pub fn load_pcseq(path: &Path) -> Result<PointCloudSequence> {
    from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::{Error, FormatError, FormatErrorKind};
    use nalgebra::Vector3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn sample_seq() -> PointCloudSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // Draw in f32 and promote: coordinates stay exactly representable,
        // so round trips are equality-exact.
        let coord = |rng: &mut ChaCha8Rng| rng.gen_range(-4.0f32..4.0f32) as f64;
        let frames: Vec<Vec<Point3>> = (0..5)
            .map(|_| {
                let n = rng.gen_range(0..40);
                (0..n)
                    .map(|_| {
                        Vector3::new(coord(&mut rng), coord(&mut rng), coord(&mut rng))
                    })
                    .collect()
            })
            .collect();
        PointCloudSequence::from_points(frames)
    }

    #[test]
    fn round_trip_equality() {
        let seq = sample_seq();
        let bytes = to_bytes(&seq);
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back, seq);
        // Byte-level idempotence.
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn empty_frames_are_legal() {
        let seq = PointCloudSequence::from_points(vec![
            vec![],
            vec![Vector3::new(1.0, 2.0, 3.0)],
            vec![],
        ]);
        let back = from_bytes(&to_bytes(&seq)).unwrap();
        assert_eq!(back.n_frames(), 3);
        assert!(back.frames[0].points.is_empty());
        assert_eq!(back.frames[1].points.len(), 1);
    }

    #[test]
    fn truncation_names_the_frame() {
        let seq = sample_seq();
        let bytes = to_bytes(&seq);
        let cut = &bytes[..bytes.len() - 1];
        // Depending on where the cut lands this is either a short payload
        // read or a count that no longer fits; both must name the frame.
        match from_bytes(cut) {
            Err(Error::Format(FormatError {
                kind: FormatErrorKind::Truncated { what },
                ..
            }))
            | Err(Error::Format(FormatError {
                kind: FormatErrorKind::Oversized { what, .. },
                ..
            })) => assert!(what.starts_with("frame "), "got {what:?}"),
            other => panic!("expected a frame-scoped error, got {other:?}"),
        }
    }

    #[test]
    fn every_prefix_fails_cleanly() {
        let bytes = to_bytes(&sample_seq());
        for len in 0..bytes.len() {
            assert!(from_bytes(&bytes[..len]).is_err(), "prefix {len} decoded");
        }
    }

    #[test]
    fn oversized_counts_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"PCSQ");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError {
                kind: FormatErrorKind::Oversized { .. },
                ..
            }))
        ));
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"PCSQ");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes()); // one frame
        bytes.extend_from_slice(&1u32.to_le_bytes()); // one point
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        bytes.extend_from_slice(&3.0f32.to_le_bytes());
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError {
                kind: FormatErrorKind::NonFinite { .. },
                ..
            }))
        ));
    }

    #[test]
    fn wrong_version_and_magic() {
        let mut bytes = to_bytes(&sample_seq());
        bytes[4] = 2;
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError {
                offset: 4,
                kind: FormatErrorKind::Version {
                    found: 2,
                    expected: 1
                },
            }))
        ));
        let mut bytes = to_bytes(&sample_seq());
        bytes[0] = b'Q';
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError {
                offset: 0,
                kind: FormatErrorKind::BadMagic { expected: "PCSQ" },
            }))
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = to_bytes(&sample_seq());
        bytes.extend_from_slice(&[1, 2]);
        assert!(matches!(
            from_bytes(&bytes),
            Err(Error::Format(FormatError {
                kind: FormatErrorKind::Trailing { extra: 2 },
                ..
            }))
        ));
    }
}
