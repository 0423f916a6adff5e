//! Local HOPC: view-invariant description of an STK's spatio-temporal
//! support, plus the view-dependent holistic variant over a whole sequence.
//!
//! The support is rotated into the STK's *spatial* eigenbasis (that rotation
//! is what cancels the camera viewpoint), each point contributes a HOPC
//! descriptor masked by the three-way ambiguity criteria, contributions are
//! accumulated over an n_x × n_y × n_t cell grid, and cells are concatenated
//! after per-cell L2 normalization.

use rayon::prelude::*;

use crate::descriptor::{hopc, DirectionSet, HOPC_LEN, NUM_DIRECTIONS};
use crate::detect::StkRecord;
use crate::error::{Error, Result};
use crate::geom::{
    basis_for, build_support, ratio, EigenBasis, Point3, PointCloudSequence, SequenceIndex,
    SupportKind, SupportVolume,
};

/// Cell grid dimensions. Together with extents chosen by the caller the grid
/// partitions a support volume: X and Y are the post-rotation spatial axes,
/// T is the frame axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellGrid {
    pub n_x: usize,
    pub n_y: usize,
    pub n_t: usize,
}

impl CellGrid {
    pub const fn new(n_x: usize, n_y: usize, n_t: usize) -> Self {
        CellGrid { n_x, n_y, n_t }
    }

    pub fn cells(&self) -> usize {
        self.n_x * self.n_y * self.n_t
    }

    pub fn descriptor_len(&self) -> usize {
        self.cells() * HOPC_LEN
    }

    /// Row-major cell index, x fastest, then y, then t.
    pub fn cell_index(&self, ix: usize, iy: usize, it: usize) -> usize {
        ix + self.n_x * (iy + self.n_y * it)
    }

    /// Bins a coordinate into `n` half-open cells over [lo, hi] (last cell
    /// closed); out-of-range values clamp into the boundary cells. A
    /// degenerate extent maps everything to cell 0.
    pub fn spatial_bin(value: f64, lo: f64, hi: f64, n: usize) -> usize {
        let span = hi - lo;
        if !(span > 0.0) {
            return 0;
        }
        let raw = ((value - lo) / span * n as f64).floor();
        if raw < 0.0 {
            0
        } else {
            (raw as usize).min(n - 1)
        }
    }

    /// Bins frame `f` of a nominal window [lo_t, lo_t + span − 1] into `n_t`
    /// cells by exact integer arithmetic.
    pub fn temporal_bin(f: usize, lo_t: usize, span: usize, n: usize) -> usize {
        debug_assert!(f >= lo_t);
        (((f - lo_t) * n) / span).min(n - 1)
    }
}

impl Default for CellGrid {
    fn default() -> Self {
        CellGrid::new(2, 2, 3)
    }
}

impl std::str::FromStr for CellGrid {
    type Err = Error;

    /// Parses "2x2x3".
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('x').collect();
        let bad = || Error::BadParameter(format!("grid {s:?}, expected NXxNYxNT"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let dims: Vec<usize> = parts
            .iter()
            .map(|p| p.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if dims.iter().any(|&d| d == 0) {
            return Err(bad());
        }
        Ok(CellGrid::new(dims[0], dims[1], dims[2]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalHopcDescriptor {
    pub h: Vec<f64>,
}

/// Rotates the members of a support volume into the given eigenbasis:
/// q′ = Vᵀ(q − μ) with μ the basis mean, so the principal directions map to
/// X, Y, Z.
pub fn orient_points(vol: &SupportVolume, basis: &EigenBasis) -> Result<Vec<Point3>> {
    basis.check()?;
    let vt = basis.vectors.transpose();
    Ok(vol.members.iter().map(|q| vt * (q - basis.mean)).collect())
}

/// Masked HOPC contribution of one oriented point given its neighborhood.
/// The three-way criteria: both eigenratios unambiguous → full descriptor;
/// only the second (δ23) → the least-principal block alone; only the first
/// (δ12) → the principal block alone; neither → nothing.
pub fn point_contribution(
    nbhd: &SupportVolume,
    theta_l: f64,
    dirs: &DirectionSet,
) -> [f64; HOPC_LEN] {
    let mut out = [0.0; HOPC_LEN];
    let Ok(basis) = basis_for(nbhd) else {
        return out; // empty neighborhood contributes nothing
    };
    let [l1, l2, l3] = basis.eigenvalues;
    let d12 = ratio(l1, l2) > theta_l;
    let d23 = ratio(l2, l3) > theta_l;
    let keep: [bool; 3] = match (d12, d23) {
        (true, true) => [true, true, true],
        (false, true) => [false, false, true],
        (true, false) => [true, false, false],
        (false, false) => return out,
    };
    let Ok(h) = hopc(nbhd, &basis, dirs) else {
        return out;
    };
    for j in 0..3 {
        if keep[j] {
            out[j * NUM_DIRECTIONS..(j + 1) * NUM_DIRECTIONS]
                .copy_from_slice(h.block(j));
        }
    }
    out
}

fn l2_normalize_cells(cells: &mut [f64]) {
    for block in cells.chunks_mut(HOPC_LEN) {
        let norm = block.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in block {
                *x /= norm;
            }
        }
    }
}

/// The Local HOPC descriptor of one STK. The spatio-temporal support
/// Ω^ST(τ*) is oriented by the STK's spatial basis; X/Y cells subdivide the
/// fixed box [−r, r]² (points pushed outside by mean-centering clamp into the
/// boundary cells) and T cells subdivide the nominal window [t−τ*, t+τ*].
/// Per-point neighborhoods reuse the same r and τ* on the oriented cloud.
pub fn local_hopc(
    seq: &PointCloudSequence,
    stk: &StkRecord,
    r: f64,
    grid: &CellGrid,
    theta_l: f64,
    dirs: &DirectionSet,
) -> Result<LocalHopcDescriptor> {
    let vol = build_support(
        seq,
        &stk.position,
        stk.t,
        r,
        stk.tau_star,
        SupportKind::SpatioTemporal,
    );
    if vol.is_empty() {
        return Err(Error::EmptySupport);
    }
    let oriented = orient_points(&vol, &stk.spatial_basis)?;
    let frames = &vol.member_frames;

    let mut cells = vec![0.0; grid.descriptor_len()];
    let tau = stk.tau_star;
    // The nominal window start may predate frame 1; binning against the
    // nominal origin keeps cells meaningful at sequence boundaries.
    let nominal_lo = stk.t as i64 - tau as i64;
    let span = 2 * tau + 1;

    let r2 = r * r;
    let contributions: Vec<(usize, [f64; HOPC_LEN])> = (0..oriented.len())
        .into_par_iter()
        .map(|i| {
            let q = oriented[i];
            let f_i = frames[i];
            // Neighborhood of q in the oriented cloud: same radius, frames
            // within τ* of the point's own frame, original member order.
            let mut members = Vec::new();
            let mut member_frames = Vec::new();
            for (j, o) in oriented.iter().enumerate() {
                if frames[j].abs_diff(f_i) as usize <= tau && (o - q).norm_squared() <= r2 {
                    members.push(*o);
                    member_frames.push(frames[j]);
                }
            }
            let nbhd = SupportVolume {
                center: q,
                t: f_i as usize,
                kind: SupportKind::SpatioTemporal,
                radius: r,
                tau,
                members,
                member_frames,
            };
            let contrib = point_contribution(&nbhd, theta_l, dirs);
            let ix = CellGrid::spatial_bin(q.x, -r, r, grid.n_x);
            let iy = CellGrid::spatial_bin(q.y, -r, r, grid.n_y);
            let it = CellGrid::temporal_bin(
                (f_i as i64 - nominal_lo) as usize,
                0,
                span,
                grid.n_t,
            );
            (grid.cell_index(ix, iy, it), contrib)
        })
        .collect();
    // Sequential accumulation in member order keeps the sum bit-deterministic.
    for (cell, contrib) in contributions {
        let slot = &mut cells[cell * HOPC_LEN..(cell + 1) * HOPC_LEN];
        for (s, c) in slot.iter_mut().zip(contrib.iter()) {
            *s += c;
        }
    }
    l2_normalize_cells(&mut cells);
    Ok(LocalHopcDescriptor { h: cells })
}

/// Holistic HOPC over a whole sequence: every point's plain spatio-temporal
/// HOPC (fixed τ, no orientation normalization, no masking) accumulated over
/// a grid spanning the sequence bounding box in X, Y and all frames in T.
/// View-dependent by construction.
pub fn holistic_hopc(
    seq: &PointCloudSequence,
    grid: &CellGrid,
    tau: usize,
    r: f64,
    dirs: &DirectionSet,
) -> Result<Vec<f64>> {
    if seq.n_frames() == 0 || seq.total_points() == 0 {
        return Err(Error::EmptySequence);
    }
    let index = SequenceIndex::new(seq, r)?;
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for frame in &seq.frames {
        for p in &frame.points {
            x_lo = x_lo.min(p.x);
            x_hi = x_hi.max(p.x);
            y_lo = y_lo.min(p.y);
            y_hi = y_hi.max(p.y);
        }
    }
    let n_f = seq.n_frames();

    let mut jobs: Vec<(usize, usize)> = Vec::new();
    for t in 1..=n_f {
        for i in 0..seq.frame(t).map_or(0, |f| f.points.len()) {
            jobs.push((t, i));
        }
    }
    let per_point: Vec<(usize, Option<crate::descriptor::HopcDescriptor>)> = jobs
        .par_iter()
        .map(|&(t, i)| {
            let p = seq.frame(t).unwrap().points[i];
            let vol = index.support(&p, t, r, tau, SupportKind::SpatioTemporal);
            let h = basis_for(&vol).ok().and_then(|b| hopc(&vol, &b, dirs).ok());
            let ix = CellGrid::spatial_bin(p.x, x_lo, x_hi, grid.n_x);
            let iy = CellGrid::spatial_bin(p.y, y_lo, y_hi, grid.n_y);
            let it = CellGrid::temporal_bin(t, 1, n_f, grid.n_t);
            (grid.cell_index(ix, iy, it), h)
        })
        .collect();

    let mut cells = vec![0.0; grid.descriptor_len()];
    for (cell, h) in per_point {
        if let Some(h) = h {
            let slot = &mut cells[cell * HOPC_LEN..(cell + 1) * HOPC_LEN];
            for (s, c) in slot.iter_mut().zip(h.h.iter()) {
                *s += c;
            }
        }
    }
    l2_normalize_cells(&mut cells);
    Ok(cells)
}

/// Cosine similarity between two equal-length descriptors; 0 when either is
/// all-zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
