//! Support volumes, covariance and sign-disambiguated eigenbases.
//!
//! Everything downstream (descriptors, keypoint detection, temporal scale
//! selection) is built on the primitives in this module: gather the points
//! inside a sphere around `p` — optionally merged over a window of frames —
//! take the covariance, decompose it, and fix the eigenvector signs so the
//! basis is reproducible across views.

use std::collections::HashMap;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Spatial coordinates in scene units (meters for real sensors).
pub type Point3 = Vector3<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudFrame {
    /// 1-based frame number; strictly increasing within a sequence.
    pub timestamp_index: u32,
    pub points: Vec<Point3>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudSequence {
    pub frames: Vec<PointCloudFrame>,
}

impl PointCloudSequence {
    /// Builds a sequence from per-frame point lists, numbering frames 1..n.
    pub fn from_points(frames: Vec<Vec<Point3>>) -> Self {
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(i, points)| PointCloudFrame {
                timestamp_index: i as u32 + 1,
                points,
            })
            .collect();
        PointCloudSequence { frames }
    }

    pub fn new(frames: Vec<PointCloudFrame>) -> Result<Self> {
        if !frames.windows(2).all(|w| w[0].timestamp_index < w[1].timestamp_index) {
            return Err(Error::UnorderedFrames);
        }
        Ok(PointCloudSequence { frames })
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    /// Frame by ordinal position `t` in 1..=n_f. All temporal windows in this
    /// crate are expressed in ordinal positions, so sequences are assumed
    /// densely sampled.
    pub fn frame(&self, t: usize) -> Option<&PointCloudFrame> {
        if t == 0 {
            return None;
        }
        self.frames.get(t - 1)
    }

    pub fn total_points(&self) -> usize {
        self.frames.iter().map(|f| f.points.len()).sum()
    }

    /// Ordinal range `[t−τ, t+τ]` clipped to `[1, n_f]`.
    pub fn clip_window(&self, t: usize, tau: usize) -> std::ops::RangeInclusive<usize> {
        let lo = t.saturating_sub(tau).max(1);
        let hi = (t + tau).min(self.n_frames());
        lo..=hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    Spatial,
    SpatioTemporal,
}

/// The points inside a sphere of radius `r` around `center`, drawn from frame
/// `t` alone (`Spatial`) or merged over frames `[t−τ, t+τ]`
/// (`SpatioTemporal`). Duplicate coordinates across merged frames are
/// retained: they carry temporal density.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportVolume {
    pub center: Point3,
    pub t: usize,
    pub kind: SupportKind,
    pub radius: f64,
    pub tau: usize,
    pub members: Vec<Point3>,
    /// Frame of origin for each member, parallel to `members`.
    pub member_frames: Vec<u32>,
}

impl SupportVolume {
    pub fn n_points(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[inline]
fn within(q: &Point3, p: &Point3, r2: f64) -> bool {
    (q - p).norm_squared() <= r2
}

/// Gathers the support volume by brute-force distance filtering. Members are
/// ordered frame-ascending, original point order within each frame; the
/// voxel-grid path in [`SequenceIndex`] reproduces this ordering bit-exactly.
pub fn build_support(
    seq: &PointCloudSequence,
    p: &Point3,
    t: usize,
    r: f64,
    tau: usize,
    kind: SupportKind,
) -> SupportVolume {
    let window = match kind {
        SupportKind::Spatial => t..=t,
        SupportKind::SpatioTemporal => seq.clip_window(t, tau),
    };
    let r2 = r * r;
    let mut members = Vec::new();
    let mut member_frames = Vec::new();
    for f in window {
        if let Some(frame) = seq.frame(f) {
            for q in &frame.points {
                if within(q, p, r2) {
                    members.push(*q);
                    member_frames.push(f as u32);
                }
            }
        }
    }
    SupportVolume {
        center: *p,
        t,
        kind,
        radius: r,
        tau: if kind == SupportKind::Spatial { 0 } else { tau },
        members,
        member_frames,
    }
}

/// Mean and population covariance of the member points.
pub fn covariance(vol: &SupportVolume) -> Result<(Point3, Matrix3<f64>)> {
    let n = vol.members.len();
    if n == 0 {
        return Err(Error::EmptySupport);
    }
    let inv = 1.0 / n as f64;
    let mut mu = Point3::zeros();
    for q in &vol.members {
        mu += q;
    }
    mu *= inv;
    let mut c = Matrix3::zeros();
    for q in &vol.members {
        let d = q - mu;
        c += d * d.transpose();
    }
    c *= inv;
    Ok((mu, c))
}

const SYM_TOL: f64 = 1e-9;

/// Eigen-decomposition of a symmetric PSD 3×3 matrix. Eigenvalues are
/// returned descending with tiny negatives clamped to zero; columns of `V`
/// are the matching unit eigenvectors (signs arbitrary until
/// [`disambiguate`]).
pub fn eigen3(c: &Matrix3<f64>) -> Result<([f64; 3], Matrix3<f64>)> {
    let asym = (c - c.transpose()).abs().max();
    let scale = c.abs().max().max(1.0);
    if asym > SYM_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    // Symmetrize so roundoff in the input cannot leak into the solver.
    let s = (c + c.transpose()) * 0.5;
    let eig = s.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    // Stable descending sort by eigenvalue (index tie-break).
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut lambda = [0.0; 3];
    let mut v = Matrix3::zeros();
    for (dst, &src) in order.iter().enumerate() {
        lambda[dst] = eig.eigenvalues[src].max(0.0);
        let col = eig.eigenvectors.column(src).normalize();
        v.set_column(dst, &col);
    }
    Ok((lambda, v))
}

/// A disambiguated eigenbasis: descending eigenvalues, unit right-handed
/// columns, and the support mean. `sign_ties[j]` is set when the sign score
/// of Eq-style disambiguation was exactly zero and the input sign was kept.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub eigenvalues: [f64; 3],
    pub vectors: Matrix3<f64>,
    pub mean: Point3,
    pub sign_ties: [bool; 3],
}

impl EigenBasis {
    pub fn eigenvector(&self, j: usize) -> Vector3<f64> {
        self.vectors.column(j).into()
    }

    /// λ2/λ1 and λ3/λ2 with the conventions x/0 = +∞ for x > 0 and 0/0 = 1.
    pub fn eigenratios(&self) -> (f64, f64) {
        (
            ratio(self.eigenvalues[1], self.eigenvalues[0]),
            ratio(self.eigenvalues[2], self.eigenvalues[1]),
        )
    }

    pub fn check(&self) -> Result<()> {
        let v = &self.vectors;
        let gram = v.transpose() * v;
        if (gram - Matrix3::identity()).abs().max() > 1e-9 {
            return Err(Error::InvalidBasis);
        }
        let cross = self.eigenvector(0).cross(&self.eigenvector(1));
        if (cross - self.eigenvector(2)).norm() > 1e-9 {
            return Err(Error::InvalidBasis);
        }
        Ok(())
    }
}

pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        1.0
    }
}

/// Fixes eigenvector signs so the basis is reproducible: each column votes
/// with the sign of Σ_q sign(oᵀv_j)·(oᵀv_j)² over members q, o = q − center.
/// A zero score keeps the input sign and records a tie. If the result is
/// left-handed, the column with the smallest |score| flips (ties go to the
/// largest index, i.e. the least principal direction).
pub fn disambiguate(
    eigenvalues: [f64; 3],
    vectors: &Matrix3<f64>,
    mean: Point3,
    vol: &SupportVolume,
) -> Result<EigenBasis> {
    if vol.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut v = *vectors;
    let mut scores = [0.0f64; 3];
    let mut ties = [false; 3];
    for j in 0..3 {
        let col: Vector3<f64> = v.column(j).into();
        let mut s = 0.0;
        for q in &vol.members {
            let d = (q - vol.center).dot(&col);
            s += d.signum() * d * d;
        }
        scores[j] = s;
        if s < 0.0 {
            let flipped = -col;
            v.set_column(j, &flipped);
            scores[j] = -s;
        } else if s == 0.0 {
            ties[j] = true;
        }
    }
    let v1: Vector3<f64> = v.column(0).into();
    let v2: Vector3<f64> = v.column(1).into();
    let v3: Vector3<f64> = v.column(2).into();
    if (v1.cross(&v2) - v3).norm() > 1e-9 {
        let mut k = 0;
        for j in 1..3 {
            if scores[j] <= scores[k] {
                k = j;
            }
        }
        let flipped = -Vector3::from(v.column(k));
        v.set_column(k, &flipped);
    }
    let basis = EigenBasis {
        eigenvalues,
        vectors: v,
        mean,
        sign_ties: ties,
    };
    basis.check()?;
    Ok(basis)
}

/// Covariance → eigen3 → disambiguate in one call.
pub fn basis_for(vol: &SupportVolume) -> Result<EigenBasis> {
    let (mu, c) = covariance(vol)?;
    let (lambda, v) = eigen3(&c)?;
    disambiguate(lambda, &v, mu, vol)
}

type CellKey = (i64, i64, i64);

/// Per-frame uniform voxel grid for neighborhood queries. Cell size is the
/// query radius, so a lookup touches at most 27 cells. Candidates are sorted
/// by point index before the exact distance test, which makes results
/// bit-equal to [`build_support`].
pub struct SequenceIndex<'a> {
    seq: &'a PointCloudSequence,
    cell: f64,
    grids: Vec<HashMap<CellKey, Vec<u32>>>,
}

#[inline]
fn cell_of(p: &Point3, cell: f64) -> CellKey {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}

impl<'a> SequenceIndex<'a> {
    pub fn new(seq: &'a PointCloudSequence, cell: f64) -> Result<Self> {
        if !(cell > 0.0) || !cell.is_finite() {
            return Err(Error::BadParameter(format!("voxel cell size {cell}")));
        }
        let grids = seq
            .frames
            .iter()
            .map(|frame| {
                let mut grid: HashMap<CellKey, Vec<u32>> = HashMap::new();
                for (i, p) in frame.points.iter().enumerate() {
                    grid.entry(cell_of(p, cell)).or_default().push(i as u32);
                }
                grid
            })
            .collect();
        Ok(SequenceIndex { seq, cell, grids })
    }

    pub fn sequence(&self) -> &'a PointCloudSequence {
        self.seq
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// Indices (ascending) of points of ordinal frame `t` within `r` of `p`.
    /// Requires `r ≤ cell` so the 27-cell neighborhood covers the ball.
    pub fn frame_neighbors(&self, t: usize, p: &Point3, r: f64, out: &mut Vec<u32>) {
        out.clear();
        debug_assert!(r <= self.cell * (1.0 + 1e-12));
        let Some(frame) = self.seq.frame(t) else {
            return;
        };
        let grid = &self.grids[t - 1];
        let (cx, cy, cz) = cell_of(p, self.cell);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = grid.get(&(cx + dx, cy + dy, cz + dz)) {
                        out.extend_from_slice(ids);
                    }
                }
            }
        }
        out.sort_unstable();
        let r2 = r * r;
        out.retain(|&i| within(&frame.points[i as usize], p, r2));
    }

    /// Grid-accelerated [`build_support`]; identical output.
    pub fn support(
        &self,
        p: &Point3,
        t: usize,
        r: f64,
        tau: usize,
        kind: SupportKind,
    ) -> SupportVolume {
        let window = match kind {
            SupportKind::Spatial => t..=t,
            SupportKind::SpatioTemporal => self.seq.clip_window(t, tau),
        };
        let mut members = Vec::new();
        let mut member_frames = Vec::new();
        let mut scratch = Vec::new();
        for f in window {
            self.frame_neighbors(f, p, r, &mut scratch);
            let frame = self.seq.frame(f).expect("frame in clipped window");
            for &i in &scratch {
                members.push(frame.points[i as usize]);
                member_frames.push(f as u32);
            }
        }
        SupportVolume {
            center: *p,
            t,
            kind,
            radius: r,
            tau: if kind == SupportKind::Spatial { 0 } else { tau },
            members,
            member_frames,
        }
    }
}
