//! Cross-view evaluation harness over synthetic multi-view data.
//!
//! A dataset is a grid of (motion, subject, view) sequences. Subjects vary
//! in height and pace; views share the subject's body samples and differ
//! only by camera yaw, so view splits are genuine: the test view shows the
//! same performances from an unseen direction. Codebook learning and
//! feature mining see training views only.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline::model::TrainedModel;
use crate::pipeline::{
    action_descriptor, bow_histogram, fscore_columns, kmeans, l1_normalized, select_features,
    sequence_features, svm, FeatureMode, PipelineParams, SequenceFeatures, SvmParams,
};
use crate::synth::{synth_generate, CameraPose, MotionKind, SynthSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    pub motions: Vec<MotionKind>,
    pub subjects: usize,
    /// Camera yaw per view, degrees.
    pub views: Vec<f64>,
    pub frames: usize,
    pub base_speed: f64,
    pub noise_sigma: f64,
    pub points_per_frame: usize,
    pub base_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            motions: MotionKind::ALL.to_vec(),
            subjects: 5,
            views: vec![0.0, 45.0, 90.0],
            frames: 32,
            base_speed: 1.0,
            noise_sigma: 0.0,
            points_per_frame: 260,
            base_seed: 1234,
        }
    }
}

/// One sequence with its provenance tags and extracted features.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Class id: index of the motion in the dataset's motion list.
    pub label: usize,
    pub motion: MotionKind,
    pub subject: usize,
    /// Index into the dataset's view list.
    pub view: usize,
    pub features: SequenceFeatures,
}

/// Generate and featurize the full grid, in parallel.
pub fn generate_dataset(ds: &DatasetSpec, params: &PipelineParams) -> Result<Vec<Sample>> {
    if ds.motions.is_empty() || ds.subjects == 0 || ds.views.is_empty() {
        return Err(Error::BadParameter(
            "dataset needs at least one motion, subject, and view".into(),
        ));
    }
    let mut specs = Vec::new();
    for (label, &motion) in ds.motions.iter().enumerate() {
        for subject in 0..ds.subjects {
            // Body samples and pace belong to the performance, not the
            // camera: seeded independently of the view.
            let performance_seed =
                ds.base_seed + 97 * (label * ds.subjects + subject) as u64;
            let height = 1.55 + 0.08 * subject as f64;
            let speed = ds.base_speed * (0.9 + 0.05 * subject as f64);
            for (view, &yaw) in ds.views.iter().enumerate() {
                specs.push((
                    label,
                    motion,
                    subject,
                    view,
                    SynthSpec {
                        motion,
                        speed,
                        height,
                        camera: CameraPose::yaw(yaw),
                        noise_sigma: ds.noise_sigma,
                        frames: ds.frames,
                        seed: performance_seed,
                        points_per_frame: ds.points_per_frame,
                    },
                ));
            }
        }
    }
    specs
        .par_iter()
        .map(|(label, motion, subject, view, spec)| {
            let out = synth_generate(spec)?;
            let features = sequence_features(&out.seq, params)?;
            Ok(Sample {
                label: *label,
                motion: *motion,
                subject: *subject,
                view: *view,
                features,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalParams {
    pub k: usize,
    pub keep_fraction: f64,
    pub codebook_seed: u64,
    pub svm: SvmParams,
    pub modes: Vec<FeatureMode>,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            k: 1500,
            keep_fraction: 0.98,
            codebook_seed: 7,
            svm: SvmParams::default(),
            modes: vec![
                FeatureMode::Combined,
                FeatureMode::BowOnly,
                FeatureMode::StkdOnly,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeReport {
    pub mode: FeatureMode,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    /// `confusion[true_label][predicted_label]`.
    pub confusion: Vec<Vec<usize>>,
    /// `(sample index, true label, predicted label)` per test sample.
    pub predictions: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub train_views: Vec<usize>,
    pub test_views: Vec<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub modes: Vec<ModeReport>,
}

impl EvalReport {
    pub fn mode(&self, mode: FeatureMode) -> Option<&ModeReport> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    /// The summary table written by the evaluation command.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,accuracy,correct,total\n");
        for m in &self.modes {
            out.push_str(&format!(
                "{},{:.4},{},{}\n",
                m.mode.as_str(),
                m.accuracy,
                m.correct,
                m.total
            ));
        }
        out
    }
}

/// Train on some views, test on disjoint ones.
///
/// The codebook and the F-score mask are learned from training-view data
/// only; the split is enforced against each sample's view tag before any
/// descriptor crosses the boundary.
pub fn cross_view(
    samples: &[Sample],
    train_views: &[usize],
    test_views: &[usize],
    ep: &EvalParams,
    pp: &PipelineParams,
) -> Result<EvalReport> {
    if train_views.is_empty() || test_views.is_empty() {
        return Err(Error::BadParameter(
            "need at least one training and one test view".into(),
        ));
    }
    if train_views.iter().any(|v| test_views.contains(v)) {
        return Err(Error::BadParameter(
            "training and test views must be disjoint".into(),
        ));
    }
    if !(ep.keep_fraction > 0.0 && ep.keep_fraction <= 1.0) {
        return Err(Error::BadParameter(format!(
            "keep fraction must lie in (0, 1], got {}",
            ep.keep_fraction
        )));
    }
    if ep.modes.is_empty() {
        return Err(Error::BadParameter("no feature modes requested".into()));
    }

    let train_idx: Vec<usize> = (0..samples.len())
        .filter(|&i| train_views.contains(&samples[i].view))
        .collect();
    let test_idx: Vec<usize> = (0..samples.len())
        .filter(|&i| test_views.contains(&samples[i].view))
        .collect();
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::BadParameter(
            "the split leaves an empty training or test set".into(),
        ));
    }

    // Codebook: training views only, by construction of train_idx.
    let train_locals: Vec<Vec<f64>> = train_idx
        .iter()
        .flat_map(|&i| samples[i].features.locals.iter().cloned())
        .collect();
    let mut codebook = kmeans(&train_locals, ep.k, ep.codebook_seed, 100)?;

    // Mine codewords on training-view histograms.
    let train_labels: Vec<usize> = train_idx.iter().map(|&i| samples[i].label).collect();
    let full_bows: Vec<Vec<f64>> = train_idx
        .iter()
        .map(|&i| Ok(l1_normalized(&bow_histogram(&samples[i].features.locals, &codebook)?)))
        .collect::<Result<_>>()?;
    let scores = fscore_columns(&full_bows, &train_labels)?;
    codebook.keep_mask = select_features(&scores, ep.keep_fraction)?;

    // Action descriptors for every involved sample, against the mined
    // codebook.
    let descriptors: Vec<Option<crate::pipeline::ActionDescriptor>> = {
        let mut slots = vec![None; samples.len()];
        for &i in train_idx.iter().chain(&test_idx) {
            slots[i] = Some(action_descriptor(&samples[i].features, &codebook, &pp.stkd)?);
        }
        slots
    };

    let n_classes = samples.iter().map(|s| s.label).max().unwrap_or(0) + 1;
    let mut modes = Vec::new();
    for &mode in &ep.modes {
        let train_feats: Vec<Vec<f64>> = train_idx
            .iter()
            .map(|&i| mode.vector(descriptors[i].as_ref().expect("train slot filled")))
            .collect();
        let machine = svm::train(&train_feats, &train_labels, &ep.svm)?;

        // Classification always goes through the serialized form, so the
        // in-process path and the CLI path share one behavior.
        let model = TrainedModel {
            pipeline: pp.clone(),
            feature_mode: mode,
            keep_fraction: ep.keep_fraction,
            codebook: codebook.clone(),
            svm: machine,
        };
        let model = TrainedModel::from_bytes(&model.to_bytes())?;

        let mut confusion = vec![vec![0usize; n_classes]; n_classes];
        let mut predictions = Vec::with_capacity(test_idx.len());
        let mut correct = 0;
        for &i in &test_idx {
            let x = mode.vector(descriptors[i].as_ref().expect("test slot filled"));
            let pred = svm::predict(&model.svm, &x)?;
            confusion[samples[i].label][pred] += 1;
            if pred == samples[i].label {
                correct += 1;
            }
            predictions.push((i, samples[i].label, pred));
        }
        modes.push(ModeReport {
            mode,
            correct,
            total: test_idx.len(),
            accuracy: correct as f64 / test_idx.len() as f64,
            confusion,
            predictions,
        });
    }

    Ok(EvalReport {
        train_views: train_views.to_vec(),
        test_views: test_views.to_vec(),
        n_train: train_idx.len(),
        n_test: test_idx.len(),
        modes,
    })
}
