//! The trained-model container (`HOPCMODL`).
//!
//! Layout, all little-endian:
//!
//! ```text
//! "HOPCMODL"  8-byte magic
//! u32         version (currently 1)
//! pipeline    f64 sigma; flag+f64 radius override; flag+u64 window override;
//!             f64 theta_stk, theta_l, r_prime_frac; u64 tau_prime, n_k;
//!             f64 quality floor; u64 stride; u32 grid nx, ny, nt;
//!             f64 theta_g; flag+u64 m_k; u64 min_keep; u8 normalization;
//!             u8 raw directions
//! u8          feature mode (0 combined, 1 bow, 2 stkd)
//! f64         keep fraction
//! svm params  f64 c; f64 tol; u64 max_iter
//! codebook    u64 seed; u32 k; u32 dim; k*dim f32; k keep flags
//! classifier  u32 n_classes; n_classes*u64 labels; u32 n_train;
//!             u32 feat_dim; n_train*feat_dim f32 features;
//!             per class: f64 bias + n_train f32 alpha*y
//! ```
//!
//! Codebook centroids, training features, and dual coefficients are stored
//! as f32; loading promotes them back to f64. Saving a loaded model
//! reproduces the same bytes, so a model file is a stable fingerprint.

use std::path::Path;

use crate::error::{Error, FormatError, FormatErrorKind, Result};
use crate::io::bin::{put_f32_slice, put_f64, put_u32, put_u64, ByteReader};
use crate::local::CellGrid;
use crate::stkd::{NormalizationMode, StkdParams};

use super::kmeans::Codebook;
use super::svm::{BinaryMachine, KernelModel, SvmParams};
use super::{FeatureMode, PipelineParams};

pub const MODEL_MAGIC: &str = "HOPCMODL";
pub const MODEL_VERSION: u32 = 1;

/// A complete trained model: the extraction configuration, the mined
/// codebook, and the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub pipeline: PipelineParams,
    pub feature_mode: FeatureMode,
    pub keep_fraction: f64,
    pub codebook: Codebook,
    pub svm: KernelModel,
}

fn put_flag(out: &mut Vec<u8>, v: bool) {
    out.push(v as u8);
}

impl TrainedModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC.as_bytes());
        put_u32(&mut out, MODEL_VERSION);

        let p = &self.pipeline;
        put_f64(&mut out, p.sigma);
        put_flag(&mut out, p.radius_override.is_some());
        put_f64(&mut out, p.radius_override.unwrap_or(0.0));
        put_flag(&mut out, p.tau_max_override.is_some());
        put_u64(&mut out, p.tau_max_override.unwrap_or(0) as u64);
        put_f64(&mut out, p.theta_stk);
        put_f64(&mut out, p.theta_l);
        put_f64(&mut out, p.r_prime_frac);
        put_u64(&mut out, p.tau_prime as u64);
        put_u64(&mut out, p.n_k as u64);
        put_f64(&mut out, p.quality_floor);
        put_u64(&mut out, p.stride as u64);
        put_u32(&mut out, p.grid.n_x as u32);
        put_u32(&mut out, p.grid.n_y as u32);
        put_u32(&mut out, p.grid.n_t as u32);
        put_f64(&mut out, p.stkd.theta_g);
        put_flag(&mut out, p.stkd.m_k.is_some());
        put_u64(&mut out, p.stkd.m_k.unwrap_or(0) as u64);
        put_u64(&mut out, p.stkd.min_keep as u64);
        out.push(match p.stkd.mode {
            NormalizationMode::PerAxis => 0,
            NormalizationMode::Isotropic => 1,
        });
        put_flag(&mut out, p.raw_directions);

        out.push(match self.feature_mode {
            FeatureMode::Combined => 0,
            FeatureMode::BowOnly => 1,
            FeatureMode::StkdOnly => 2,
        });
        put_f64(&mut out, self.keep_fraction);

        put_f64(&mut out, self.svm.params.c);
        put_f64(&mut out, self.svm.params.tol);
        put_u64(&mut out, self.svm.params.max_iter as u64);

        let cb = &self.codebook;
        put_u64(&mut out, cb.seed);
        put_u32(&mut out, cb.k() as u32);
        put_u32(&mut out, cb.dim() as u32);
        for c in &cb.centroids {
            put_f32_slice(&mut out, c);
        }
        for &keep in &cb.keep_mask {
            put_flag(&mut out, keep);
        }

        put_u32(&mut out, self.svm.class_labels.len() as u32);
        for &l in &self.svm.class_labels {
            put_u64(&mut out, l as u64);
        }
        put_u32(&mut out, self.svm.train_features.len() as u32);
        put_u32(
            &mut out,
            self.svm.train_features.first().map_or(0, |f| f.len()) as u32,
        );
        for f in &self.svm.train_features {
            put_f32_slice(&mut out, f);
        }
        for m in &self.svm.machines {
            put_f64(&mut out, m.bias);
            put_f32_slice(&mut out, &m.alpha_y);
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<TrainedModel> {
        let mut r = ByteReader::new(buf);
        r.magic(MODEL_MAGIC)?;
        let at = r.offset();
        let version = r.u32("version")?;
        if version != MODEL_VERSION {
            return Err(Error::Format(FormatError::new(
                at,
                FormatErrorKind::Version {
                    found: version,
                    expected: MODEL_VERSION,
                },
            )));
        }

        let sigma = r.f64("sigma")?;
        let has_radius = r.flag("radius override flag")?;
        let radius = r.f64("radius override")?;
        let has_tau = r.flag("window override flag")?;
        let tau = r.u64("window override")? as usize;
        let theta_stk = r.f64("theta_stk")?;
        let theta_l = r.f64("theta_l")?;
        let r_prime_frac = r.f64("r_prime fraction")?;
        let tau_prime = r.u64("tau_prime")? as usize;
        let n_k = r.u64("n_k")? as usize;
        let quality_floor = r.f64("quality floor")?;
        let stride = r.u64("stride")? as usize;
        let n_x = r.u32("grid nx")? as usize;
        let n_y = r.u32("grid ny")? as usize;
        let n_t = r.u32("grid nt")? as usize;
        if n_x == 0 || n_y == 0 || n_t == 0 {
            return Err(r.fail(FormatErrorKind::Invalid(
                "cell grid dimensions must be positive".into(),
            )));
        }
        let theta_g = r.f64("theta_g")?;
        let has_mk = r.flag("m_k flag")?;
        let m_k = r.u64("m_k")? as usize;
        let min_keep = r.u64("min_keep")? as usize;
        let mode = match r.u8("normalization mode")? {
            0 => NormalizationMode::PerAxis,
            1 => NormalizationMode::Isotropic,
            other => {
                return Err(r.fail(FormatErrorKind::Invalid(format!(
                    "unknown normalization mode {other}"
                ))))
            }
        };
        let raw_directions = r.flag("raw directions")?;
        let pipeline = PipelineParams {
            sigma,
            radius_override: has_radius.then_some(radius),
            tau_max_override: has_tau.then_some(tau),
            theta_stk,
            theta_l,
            r_prime_frac,
            tau_prime,
            n_k,
            quality_floor,
            stride,
            grid: CellGrid { n_x, n_y, n_t },
            stkd: StkdParams {
                theta_g,
                m_k: has_mk.then_some(m_k),
                min_keep,
                mode,
            },
            raw_directions,
        };

        let feature_mode = match r.u8("feature mode")? {
            0 => FeatureMode::Combined,
            1 => FeatureMode::BowOnly,
            2 => FeatureMode::StkdOnly,
            other => {
                return Err(r.fail(FormatErrorKind::Invalid(format!(
                    "unknown feature mode {other}"
                ))))
            }
        };
        let keep_fraction = r.f64("keep fraction")?;
        let params = SvmParams {
            c: r.f64("svm c")?,
            tol: r.f64("svm tolerance")?,
            max_iter: r.u64("svm iteration cap")? as usize,
        };

        let seed = r.u64("codebook seed")?;
        let at = r.offset();
        let k = r.u32("codeword count")? as u64;
        let dim = r.u32("descriptor dimension")? as u64;
        let body = k
            .checked_mul(dim)
            .and_then(|v| v.checked_mul(4))
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
            centroids.push(r.f32_vec(dim as usize, "centroid")?);
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
        let codebook = Codebook {
            centroids,
            keep_mask,
            seed,
        };

        let at = r.offset();
        let n_classes = r.count("class count", 8)?;
        if n_classes < 2 {
            return Err(Error::Format(FormatError::new(
                at,
                FormatErrorKind::Invalid(format!(
                    "model must carry at least two classes, found {n_classes}"
                )),
            )));
        }
        let mut class_labels = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            class_labels.push(r.u64("class label")? as usize);
        }
        if class_labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(r.fail(FormatErrorKind::Invalid(
                "class labels must be strictly ascending".into(),
            )));
        }
        let at = r.offset();
        let n_train = r.u32("training sample count")? as u64;
        let feat_dim = r.u32("feature dimension")? as u64;
        let body = n_train
            .checked_mul(feat_dim)
            .and_then(|v| v.checked_mul(4));
        if n_train == 0 || feat_dim == 0 || !body.is_some_and(|b| b <= r.remaining() as u64) {
            return Err(Error::Format(FormatError::new(
                at,
                FormatErrorKind::Oversized {
                    what: "training features".into(),
                    declared: n_train,
                },
            )));
        }
        let mut train_features = Vec::with_capacity(n_train as usize);
        for _ in 0..n_train {
            train_features.push(r.f32_vec(feat_dim as usize, "training feature")?);
        }
        let mut machines = Vec::with_capacity(n_classes);
        for _ in 0..n_classes {
            let bias = r.f64("bias")?;
            let alpha_y = r.f32_vec(n_train as usize, "dual coefficients")?;
            machines.push(BinaryMachine { alpha_y, bias });
        }
        r.finish()?;

        Ok(TrainedModel {
            pipeline,
            feature_mode,
            keep_fraction,
            codebook,
            svm: KernelModel {
                class_labels,
                machines,
                train_features,
                params,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<TrainedModel> {
        TrainedModel::from_bytes(&std::fs::read(path)?)
    }
}
