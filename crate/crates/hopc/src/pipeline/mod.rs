//! Sequence-level recognition pipeline: bag-of-words pooling of local
//! descriptors, global distribution descriptor, feature mining, and the
//! kernel classifier.

pub mod fscore;
pub mod kmeans;
pub mod model;
pub mod svm;

use rayon::prelude::*;

use crate::descriptor::{dodecahedron, dodecahedron_raw, DirectionSet};
use crate::detect::{detect, DetectorParams, StkRecord};
use crate::error::{Error, Result};
use crate::local::{local_hopc, CellGrid};
use crate::scale::{default_tau_max, spatial_scale, ScaleParams};
use crate::stkd::{stkd, StkdParams};

pub use fscore::{fscore, fscore_columns, select_by_threshold, select_features};
pub use kmeans::{kmeans, Codebook};
pub use model::TrainedModel;
pub use svm::{decision_scores, predict, train, KernelModel, SvmParams};

/// Everything needed to turn a sequence into features, with defaults from
/// the reference configuration. The support radius and temporal window are
/// derived per sequence unless overridden.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    pub sigma: f64,
    pub radius_override: Option<f64>,
    pub tau_max_override: Option<usize>,
    pub theta_stk: f64,
    pub theta_l: f64,
    pub r_prime_frac: f64,
    pub tau_prime: usize,
    pub n_k: usize,
    pub quality_floor: f64,
    pub stride: usize,
    pub grid: CellGrid,
    pub stkd: StkdParams,
    /// Use the unnormalized direction set (histograms degenerate to zero;
    /// kept for fidelity experiments).
    pub raw_directions: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            sigma: 0.2,
            radius_override: None,
            tau_max_override: None,
            theta_stk: 1.3,
            theta_l: 1.3,
            r_prime_frac: 0.5,
            tau_prime: 2,
            n_k: 400,
            quality_floor: 1e-6,
            stride: 1,
            grid: CellGrid::default(),
            stkd: StkdParams::default(),
            raw_directions: false,
        }
    }
}

impl PipelineParams {
    pub fn direction_set(&self) -> DirectionSet {
        if self.raw_directions {
            dodecahedron_raw()
        } else {
            dodecahedron()
        }
    }

    /// Support radius for a sequence: the override, or σ times the spatial
    /// scale estimated from the first frame.
    pub fn radius_for(&self, seq: &crate::geom::PointCloudSequence) -> Result<f64> {
        if let Some(r) = self.radius_override {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::BadParameter(format!(
                    "support radius must be positive and finite, got {r}"
                )));
            }
            return Ok(r);
        }
        spatial_scale(
            seq,
            &ScaleParams {
                sigma: self.sigma,
                ..ScaleParams::default()
            },
        )
    }

    pub fn tau_max_for(&self, seq: &crate::geom::PointCloudSequence) -> usize {
        self.tau_max_override
            .unwrap_or_else(|| default_tau_max(seq.n_frames()))
    }

    pub fn detector_params(&self, r: f64) -> DetectorParams {
        DetectorParams {
            r,
            theta_stk: self.theta_stk,
            r_prime: self.r_prime_frac * r,
            tau_prime: self.tau_prime,
            n_k: self.n_k,
            quality_floor: self.quality_floor,
            stride: self.stride,
        }
    }
}

/// Per-sequence features before any codebook is involved.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFeatures {
    pub r: f64,
    pub tau_max: usize,
    pub stks: Vec<StkRecord>,
    /// One row per keypoint, `grid.descriptor_len()` wide.
    pub locals: Vec<Vec<f64>>,
}

/// One local descriptor row per keypoint, in keypoint order (parallel).
pub fn describe_stks(
    seq: &crate::geom::PointCloudSequence,
    stks: &[StkRecord],
    r: f64,
    grid: &CellGrid,
    theta_l: f64,
    dirs: &DirectionSet,
) -> Result<Vec<Vec<f64>>> {
    stks.par_iter()
        .map(|stk| local_hopc(seq, stk, r, grid, theta_l, dirs).map(|d| d.h))
        .collect()
}

/// Detect keypoints and describe each one. Descriptor rows stay aligned
/// with `stks`.
pub fn sequence_features(
    seq: &crate::geom::PointCloudSequence,
    params: &PipelineParams,
) -> Result<SequenceFeatures> {
    let dirs = params.direction_set();
    let r = params.radius_for(seq)?;
    let tau_max = params.tau_max_for(seq);
    let stks = detect(seq, &params.detector_params(r), tau_max, &dirs)?;
    let locals = describe_stks(seq, &stks, r, &params.grid, params.theta_l, &dirs)?;
    Ok(SequenceFeatures {
        r,
        tau_max,
        stks,
        locals,
    })
}

/// Histogram intersection kernel: Σ min(xᵢ, yᵢ).
pub fn hik(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(hik_raw(x, y))
}

pub(crate) fn hik_raw(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a.min(*b)).sum()
}

/// L1-normalize; an all-zero input stays zero.
pub fn l1_normalized(v: &[f64]) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    if sum > 0.0 {
        v.iter().map(|x| x / sum).collect()
    } else {
        v.to_vec()
    }
}

pub(crate) fn validate_feature_matrix(features: &[Vec<f64>]) -> Result<()> {
    if features.is_empty() {
        return Err(Error::BadParameter("no feature vectors".into()));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::BadParameter("zero-length feature vectors".into()));
    }
    for f in features {
        if f.len() != dim {
            return Err(Error::LengthMismatch {
                left: dim,
                right: f.len(),
            });
        }
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::BadParameter(
                "feature entries must be finite and non-negative".into(),
            ));
        }
    }
    Ok(())
}

/// Quantize local descriptors against the kept codewords and count votes.
/// The histogram has one bin per kept codeword, in ascending codeword index
/// order; assignment ties go to the lower index.
pub fn bow_histogram(descriptors: &[Vec<f64>], codebook: &Codebook) -> Result<Vec<f64>> {
    let kept = codebook.kept_indices();
    if kept.is_empty() {
        return Err(Error::BadParameter("codebook keeps no codewords".into()));
    }
    let dim = codebook.dim();
    let mut hist = vec![0.0f64; kept.len()];
    for d in descriptors {
        if d.len() != dim {
            return Err(Error::LengthMismatch {
                left: dim,
                right: d.len(),
            });
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (slot, &c) in kept.iter().enumerate() {
            let dd = kmeans::dist2(d, &codebook.centroids[c]);
            if dd < best_d {
                best_d = dd;
                best = slot;
            }
        }
        hist[best] += 1.0;
    }
    Ok(hist)
}

/// The sequence-level representation fed to the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDescriptor {
    /// L1-normalized bag-of-words histogram over kept codewords.
    pub bow: Vec<f64>,
    /// L1-normalized keypoint distribution histogram (600 bins).
    pub stkd: Vec<f64>,
}

impl ActionDescriptor {
    pub fn combined(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.bow.len() + self.stkd.len());
        v.extend_from_slice(&self.bow);
        v.extend_from_slice(&self.stkd);
        v
    }
}

/// Which blocks of the action descriptor feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureMode {
    Combined,
    BowOnly,
    StkdOnly,
}

impl FeatureMode {
    pub fn vector(&self, ad: &ActionDescriptor) -> Vec<f64> {
        match self {
            FeatureMode::Combined => ad.combined(),
            FeatureMode::BowOnly => ad.bow.clone(),
            FeatureMode::StkdOnly => ad.stkd.clone(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureMode::Combined => "combined",
            FeatureMode::BowOnly => "bow",
            FeatureMode::StkdOnly => "stkd",
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "combined" => Ok(FeatureMode::Combined),
            "bow" => Ok(FeatureMode::BowOnly),
            "stkd" => Ok(FeatureMode::StkdOnly),
            other => Err(Error::BadParameter(format!(
                "unknown feature mode {other:?} (expected combined, bow, or stkd)"
            ))),
        }
    }
}

/// Build the action descriptor for already-extracted features.
pub fn action_descriptor(
    features: &SequenceFeatures,
    codebook: &Codebook,
    stkd_params: &StkdParams,
) -> Result<ActionDescriptor> {
    let bow = l1_normalized(&bow_histogram(&features.locals, codebook)?);
    let dist = stkd(&features.stks, stkd_params)?;
    Ok(ActionDescriptor {
        bow,
        stkd: dist.l1(),
    })
}
