//! Spatio-temporal keypoint (STK) detection.
//!
//! A candidate point survives when (1) its temporal scale scan settles inside
//! the allowed range, (2) both its spatial and spatio-temporal eigenbases are
//! unambiguous (eigenratios above θ_STK), and (3) its quality factor η — a
//! chi-square style distance between the spatial and spatio-temporal HOPC
//! descriptors — is above the floor. Survivors then pass through greedy
//! non-maximum suppression down to at most n_k keypoints.

use rayon::prelude::*;

use crate::descriptor::{hopc, DirectionSet, HopcDescriptor, HOPC_LEN};
use crate::error::{Error, Result};
use crate::geom::{basis_for, ratio, EigenBasis, Point3, PointCloudSequence, SequenceIndex, SupportKind};
use crate::scale::temporal_scale_indexed;

#[derive(Debug, Clone, PartialEq)]
pub struct StkRecord {
    pub position: Point3,
    /// 1-based frame of detection.
    pub t: usize,
    /// Selected temporal half-window (always < τ_m for kept points).
    pub tau_star: usize,
    pub spatial_basis: EigenBasis,
    pub st_basis: EigenBasis,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorParams {
    /// Support radius (typically σ·h_s from scale selection).
    pub r: f64,
    /// Eigenratio ambiguity threshold, > 1.
    pub theta_stk: f64,
    /// NMS spatial exclusion radius, < r.
    pub r_prime: f64,
    /// NMS temporal exclusion half-window.
    pub tau_prime: usize,
    /// Maximum keypoints kept after NMS.
    pub n_k: usize,
    /// Minimum quality η; static neighborhoods score 0 and are dropped.
    pub quality_floor: f64,
    /// Candidate subsampling stride (1 = every point).
    pub stride: usize,
}

impl DetectorParams {
    pub fn with_radius(r: f64) -> Self {
        DetectorParams {
            r,
            theta_stk: 1.3,
            r_prime: 0.5 * r,
            tau_prime: 2,
            n_k: 400,
            quality_floor: 1e-6,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::BadParameter(format!("radius {}", self.r)));
        }
        if !(self.theta_stk > 1.0) {
            return Err(Error::BadParameter(format!(
                "theta_stk {} must exceed 1",
                self.theta_stk
            )));
        }
        if !(self.r_prime < self.r && self.r_prime >= 0.0) {
            return Err(Error::BadParameter(format!(
                "r_prime {} must lie in [0, r)",
                self.r_prime
            )));
        }
        if self.stride == 0 {
            return Err(Error::BadParameter("stride must be at least 1".into()));
        }
        if self.n_k == 0 {
            return Err(Error::BadParameter("n_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// True when both eigenratios λ1/λ2 and λ2/λ3 exceed θ, i.e. the basis has no
/// rotational ambiguity. Conventions: x/0 = +∞ for x > 0 (perfect anisotropy
/// passes) and 0/0 = 1 (fully degenerate covariance fails).
pub fn eigenratio_ok(l1: f64, l2: f64, l3: f64, theta: f64) -> bool {
    ratio(l1, l2) > theta && ratio(l2, l3) > theta
}

/// Quality factor η = ½ Σ (a_i − b_i)²/(a_i + b_i); zero-sum bins contribute
/// nothing. Zero for stationary neighborhoods (identical descriptors), larger
/// the more the temporal merge deforms the local shape.
pub fn quality(h_s: &HopcDescriptor, h_st: &HopcDescriptor) -> f64 {
    let mut eta = 0.0;
    for i in 0..HOPC_LEN {
        let (a, b) = (h_s.h[i], h_st.h[i]);
        let sum = a + b;
        if sum > 0.0 {
            let d = a - b;
            eta += d * d / sum;
        }
    }
    0.5 * eta
}

/// Greedy non-maximum suppression: candidates are visited by descending η
/// (ties by frame, then insertion order) and accepted unless some
/// already-accepted STK is close in space (≤ r′) *and* in time (≤ τ′).
/// Far-in-time events at the same location are distinct and both kept.
pub fn nms(mut candidates: Vec<StkRecord>, r_prime: f64, tau_prime: usize, n_k: usize) -> Vec<StkRecord> {
    candidates.sort_by(|a, b| {
        b.quality
            .partial_cmp(&a.quality)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.t.cmp(&b.t))
    });
    let r2 = r_prime * r_prime;
    let mut accepted: Vec<StkRecord> = Vec::new();
    for c in candidates {
        if accepted.len() == n_k {
            break;
        }
        let suppressed = accepted.iter().any(|a| {
            a.t.abs_diff(c.t) <= tau_prime && (a.position - c.position).norm_squared() <= r2
        });
        if !suppressed {
            accepted.push(c);
        }
    }
    accepted
}

/// Runs the full detector over every stride-th point of every frame.
/// Candidate scoring is parallel; the result is independent of thread
/// scheduling because each candidate is a pure function of the sequence and
/// the NMS ordering is total.
pub fn detect(
    seq: &PointCloudSequence,
    params: &DetectorParams,
    tau_max: usize,
    dirs: &DirectionSet,
) -> Result<Vec<StkRecord>> {
    params.validate()?;
    if seq.n_frames() == 0 {
        return Err(Error::EmptySequence);
    }
    let index = SequenceIndex::new(seq, params.r)?;
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for t in 1..=seq.n_frames() {
        let n = seq.frame(t).map_or(0, |f| f.points.len());
        for i in (0..n).step_by(params.stride) {
            candidates.push((t, i));
        }
    }
    let scored: Vec<Option<StkRecord>> = candidates
        .par_iter()
        .map(|&(t, i)| score_candidate(seq, &index, params, tau_max, dirs, t, i))
        .collect();
    let survivors: Vec<StkRecord> = scored.into_iter().flatten().collect();
    Ok(nms(survivors, params.r_prime, params.tau_prime, params.n_k))
}

fn score_candidate(
    seq: &PointCloudSequence,
    index: &SequenceIndex<'_>,
    params: &DetectorParams,
    tau_max: usize,
    dirs: &DirectionSet,
    t: usize,
    i: usize,
) -> Option<StkRecord> {
    let p = seq.frame(t)?.points[i];
    let (tau_star, keep) = temporal_scale_indexed(index, &p, t, tau_max);
    if !keep {
        return None;
    }
    let vol_s = index.support(&p, t, params.r, 0, SupportKind::Spatial);
    let spatial_basis = basis_for(&vol_s).ok()?;
    let [l1, l2, l3] = spatial_basis.eigenvalues;
    if !eigenratio_ok(l1, l2, l3, params.theta_stk) {
        return None;
    }
    let vol_st = index.support(&p, t, params.r, tau_star, SupportKind::SpatioTemporal);
    let st_basis = basis_for(&vol_st).ok()?;
    let [m1, m2, m3] = st_basis.eigenvalues;
    if !eigenratio_ok(m1, m2, m3, params.theta_stk) {
        return None;
    }
    let h_s = hopc(&vol_s, &spatial_basis, dirs).ok()?;
    let h_st = hopc(&vol_st, &st_basis, dirs).ok()?;
    let eta = quality(&h_s, &h_st);
    if eta <= params.quality_floor {
        return None;
    }
    Some(StkRecord {
        position: p,
        t,
        tau_star,
        spatial_basis,
        st_basis,
        quality: eta,
    })
}
