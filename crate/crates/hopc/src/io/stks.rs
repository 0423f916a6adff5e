//! Containers for detector output (`HOPCSTKS`) and per-keypoint
//! descriptors (`HOPCDESC`).
//!
//! Both store f64 payloads so that downstream stages reproduce in-process
//! results exactly. `HOPCSTKS` carries the support radius it was detected
//! with plus the full keypoint records; `HOPCDESC` carries the same records
//! and one descriptor row per keypoint (a holistic descriptor file has zero
//! keypoints and a single row).

use std::path::Path;

use nalgebra::Matrix3;

use crate::detect::StkRecord;
use crate::error::{Error, FormatError, FormatErrorKind, Result};
use crate::geom::{EigenBasis, Point3};
use crate::io::bin::{put_f64, put_f64_slice, put_u32, put_u64, ByteReader};

pub const STKS_MAGIC: &str = "HOPCSTKS";
pub const DESC_MAGIC: &str = "HOPCDESC";
pub const STKS_VERSION: u32 = 1;
pub const DESC_VERSION: u32 = 1;

/// Bytes per serialized keypoint record: position 3, two bases of
/// (3 + 9 + 3) f64 plus 3 flags, t, tau*, quality.
const RECORD_BYTES: usize = 3 * 8 + 2 * (15 * 8 + 3) + 8 + 8 + 8;

/// Detector output: the support radius, the temporal cap it ran with, and
/// the keypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct StkFile {
    pub r: f64,
    pub tau_max: usize,
    pub stks: Vec<StkRecord>,
}

/// Descriptor output: keypoints plus aligned descriptor rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DescFile {
    pub r: f64,
    pub stks: Vec<StkRecord>,
    /// Row-major descriptors; aligned with `stks` when both are present.
    pub rows: Vec<Vec<f64>>,
}

fn put_basis(out: &mut Vec<u8>, b: &EigenBasis) {
    put_f64_slice(out, &b.eigenvalues);
    for c in 0..3 {
        for r in 0..3 {
            put_f64(out, b.vectors[(r, c)]);
        }
    }
    put_f64(out, b.mean.x);
    put_f64(out, b.mean.y);
    put_f64(out, b.mean.z);
    for &tie in &b.sign_ties {
        out.push(tie as u8);
    }
}

fn read_basis(r: &mut ByteReader) -> Result<EigenBasis> {
    let ev = r.f64_vec(3, "eigenvalues")?;
    let vecs = r.f64_vec(9, "eigenvectors")?;
    let mean = r.f64_vec(3, "support mean")?;
    let mut sign_ties = [false; 3];
    for tie in &mut sign_ties {
        *tie = r.flag("sign tie")?;
    }
    let mut vectors = Matrix3::zeros();
    for c in 0..3 {
        for row in 0..3 {
            vectors[(row, c)] = vecs[c * 3 + row];
        }
    }
    Ok(EigenBasis {
        eigenvalues: [ev[0], ev[1], ev[2]],
        vectors,
        mean: Point3::new(mean[0], mean[1], mean[2]),
        sign_ties,
    })
}

fn put_record(out: &mut Vec<u8>, s: &StkRecord) {
    put_f64(out, s.position.x);
    put_f64(out, s.position.y);
    put_f64(out, s.position.z);
    put_u64(out, s.t as u64);
    put_u64(out, s.tau_star as u64);
    put_basis(out, &s.spatial_basis);
    put_basis(out, &s.st_basis);
    put_f64(out, s.quality);
}

fn read_record(r: &mut ByteReader) -> Result<StkRecord> {
    let pos = r.f64_vec(3, "keypoint position")?;
    let t = r.u64("keypoint frame")? as usize;
    let tau_star = r.u64("keypoint tau*")? as usize;
    let spatial_basis = read_basis(r)?;
    let st_basis = read_basis(r)?;
    let quality = r.f64("keypoint quality")?;
    if t == 0 {
        return Err(r.fail(FormatErrorKind::Invalid(
            "keypoint frame numbers are 1-based".into(),
        )));
    }
    Ok(StkRecord {
        position: Point3::new(pos[0], pos[1], pos[2]),
        t,
        tau_star,
        spatial_basis,
        st_basis,
        quality,
    })
}

pub fn stks_to_bytes(f: &StkFile) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(STKS_MAGIC.as_bytes());
    put_u32(&mut out, STKS_VERSION);
    put_f64(&mut out, f.r);
    put_u64(&mut out, f.tau_max as u64);
    put_u32(&mut out, f.stks.len() as u32);
    for s in &f.stks {
        put_record(&mut out, s);
    }
    out
}

fn check_version(r: &mut ByteReader, expected: u32) -> Result<()> {
    let at = r.offset();
    let version = r.u32("version")?;
    if version != expected {
        return Err(Error::Format(FormatError::new(
            at,
            FormatErrorKind::Version {
                found: version,
                expected,
            },
        )));
    }
    Ok(())
}

fn check_radius(r: &ByteReader, radius: f64) -> Result<()> {
    if radius <= 0.0 {
        return Err(r.fail(FormatErrorKind::Invalid(format!(
            "support radius must be positive, got {radius}"
        ))));
    }
    Ok(())
}

pub fn stks_from_bytes(buf: &[u8]) -> Result<StkFile> {
    let mut r = ByteReader::new(buf);
    r.magic(STKS_MAGIC)?;
    check_version(&mut r, STKS_VERSION)?;
    let radius = r.f64("support radius")?;
    check_radius(&r, radius)?;
    let tau_max = r.u64("temporal cap")? as usize;
    let n = r.count("keypoint count", RECORD_BYTES)?;
    let mut stks = Vec::with_capacity(n);
    for _ in 0..n {
        stks.push(read_record(&mut r)?);
    }
    r.finish()?;
    Ok(StkFile {
        r: radius,
        tau_max,
        stks,
    })
}

pub fn desc_to_bytes(f: &DescFile) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(DESC_MAGIC.as_bytes());
    put_u32(&mut out, DESC_VERSION);
    put_f64(&mut out, f.r);
    put_u32(&mut out, f.stks.len() as u32);
    for s in &f.stks {
        put_record(&mut out, s);
    }
    put_u32(&mut out, f.rows.len() as u32);
    put_u32(&mut out, f.rows.first().map_or(0, |row| row.len()) as u32);
    for row in &f.rows {
        put_f64_slice(&mut out, row);
    }
    out
}

pub fn desc_from_bytes(buf: &[u8]) -> Result<DescFile> {
    let mut r = ByteReader::new(buf);
    r.magic(DESC_MAGIC)?;
    check_version(&mut r, DESC_VERSION)?;
    let radius = r.f64("support radius")?;
    check_radius(&r, radius)?;
    let n = r.count("keypoint count", RECORD_BYTES)?;
    let mut stks = Vec::with_capacity(n);
    for _ in 0..n {
        stks.push(read_record(&mut r)?);
    }
    let at = r.offset();
    let rows = r.u32("row count")? as u64;
    let dim = r.u32("descriptor dimension")? as u64;
    let body = rows.checked_mul(dim).and_then(|v| v.checked_mul(8));
    if !body.is_some_and(|b| b <= r.remaining() as u64) {
        return Err(Error::Format(FormatError::new(
            at,
            FormatErrorKind::Oversized {
                what: "descriptor rows".into(),
                declared: rows,
            },
        )));
    }
    if !stks.is_empty() && rows as usize != stks.len() {
        return Err(Error::Format(FormatError::new(
            at,
            FormatErrorKind::Invalid(format!(
                "descriptor rows ({rows}) do not match keypoints ({})",
                stks.len()
            )),
        )));
    }
    let mut out_rows = Vec::with_capacity(rows as usize);
    for _ in 0..rows {
        out_rows.push(r.f64_vec(dim as usize, "descriptor row")?);
    }
    r.finish()?;
    Ok(DescFile {
        r: radius,
        stks,
        rows: out_rows,
    })
}

pub fn save_stks(path: &Path, f: &StkFile) -> Result<()> {
    Ok(std::fs::write(path, stks_to_bytes(f))?)
}

pub fn load_stks(path: &Path) -> Result<StkFile> {
    stks_from_bytes(&std::fs::read(path)?)
}

pub fn save_desc(path: &Path, f: &DescFile) -> Result<()> {
    Ok(std::fs::write(path, desc_to_bytes(f))?)
}

pub fn load_desc(path: &Path) -> Result<DescFile> {
    desc_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn sample_basis(shift: f64) -> EigenBasis {
        EigenBasis {
            eigenvalues: [3.0 + shift, 1.5, 0.25],
            vectors: Matrix3::identity(),
            mean: Point3::new(0.5, -1.25, shift),
            sign_ties: [false, true, false],
        }
    }

    fn sample_file() -> StkFile {
        let stks = (1..=3)
            .map(|t| StkRecord {
                position: Vector3::new(t as f64, 0.5, -0.25 * t as f64),
                t,
                tau_star: t.min(2),
                spatial_basis: sample_basis(0.0),
                st_basis: sample_basis(0.125),
                quality: 0.375 * t as f64,
            })
            .collect();
        StkFile {
            r: 0.5,
            tau_max: 4,
            stks,
        }
    }

    #[test]
    fn stks_round_trip_is_exact() {
        let f = sample_file();
        let bytes = stks_to_bytes(&f);
        let back = stks_from_bytes(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(stks_to_bytes(&back), bytes);
    }

    #[test]
    fn desc_round_trip_is_exact() {
        let f = DescFile {
            r: 0.5,
            stks: sample_file().stks,
            rows: vec![vec![0.1, 0.2, 0.3]; 3],
        };
        let bytes = desc_to_bytes(&f);
        let back = desc_from_bytes(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(desc_to_bytes(&back), bytes);
    }

    #[test]
    fn holistic_layout_zero_stks_one_row() {
        let f = DescFile {
            r: 1.0,
            stks: vec![],
            rows: vec![vec![0.0; 16]],
        };
        let back = desc_from_bytes(&desc_to_bytes(&f)).unwrap();
        assert_eq!(back.rows.len(), 1);
        assert!(back.stks.is_empty());
    }

    #[test]
    fn row_keypoint_mismatch_rejected() {
        let mut f = DescFile {
            r: 0.5,
            stks: sample_file().stks,
            rows: vec![vec![0.0; 4]; 3],
        };
        f.rows.pop();
        assert!(matches!(
            desc_from_bytes(&desc_to_bytes(&f)),
            Err(Error::Format(FormatError {
                kind: FormatErrorKind::Invalid(_),
                ..
            }))
        ));
    }

    #[test]
    fn every_prefix_fails_cleanly() {
        let bytes = stks_to_bytes(&sample_file());
        for len in 0..bytes.len() {
            assert!(stks_from_bytes(&bytes[..len]).is_err());
        }
        let d = DescFile {
            r: 0.5,
            stks: sample_file().stks,
            rows: vec![vec![1.0; 4]; 3],
        };
        let bytes = desc_to_bytes(&d);
        for len in 0..bytes.len() {
            assert!(desc_from_bytes(&bytes[..len]).is_err());
        }
    }

    #[test]
    fn zero_frame_number_rejected() {
        let mut f = sample_file();
        f.stks[1].t = 0;
        assert!(stks_from_bytes(&stks_to_bytes(&f)).is_err());
    }

    #[test]
    fn negative_radius_rejected() {
        let mut f = sample_file();
        f.r = -0.5;
        assert!(stks_from_bytes(&stks_to_bytes(&f)).is_err());
    }

    #[test]
    fn oversized_count_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(STKS_MAGIC.as_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&0.5f64.to_le_bytes());
        bytes.extend_from_slice(&4u64.to_le_bytes());
        bytes.extend_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(
            stks_from_bytes(&bytes),
            Err(Error::Format(FormatError {
                kind: FormatErrorKind::Oversized { .. },
                ..
            }))
        ));
    }
}
