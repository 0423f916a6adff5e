//! Deterministic synthetic depth-style sequences: an articulated stick
//! body (sampled cylinders plus a head sphere) animated by a small set of
//! motions, posed by a camera rotation/translation, with optional z-only
//! sensor noise.
//!
//! Surface samples are drawn once per sequence and carried through the
//! kinematics, so the same body point corresponds across frames and across
//! camera views. That makes rigid-rotation and scaling experiments exact by
//! construction.

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloudSequence};

/// Nominal frames per motion cycle at speed 1.
pub const CYCLE_FRAMES: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    Wave,
    Punch,
    Sit,
    Raise,
}

impl MotionKind {
    pub const ALL: [MotionKind; 4] = [
        MotionKind::Wave,
        MotionKind::Punch,
        MotionKind::Sit,
        MotionKind::Raise,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MotionKind::Wave => "wave",
            MotionKind::Punch => "punch",
            MotionKind::Sit => "sit",
            MotionKind::Raise => "raise",
        }
    }
}

impl std::str::FromStr for MotionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wave" => Ok(MotionKind::Wave),
            "punch" => Ok(MotionKind::Punch),
            "sit" => Ok(MotionKind::Sit),
            "raise" => Ok(MotionKind::Raise),
            other => Err(Error::BadParameter(format!(
                "unknown motion {other:?} (expected wave, punch, sit, or raise)"
            ))),
        }
    }
}

/// Extrinsic camera pose: the body is rotated by yaw/pitch/roll (degrees,
/// applied in that order around y, x, z) and then translated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraPose {
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
    pub translation: [f64; 3],
}

impl Default for CameraPose {
    fn default() -> Self {
        CameraPose {
            yaw_deg: 0.0,
            pitch_deg: 0.0,
            roll_deg: 0.0,
            translation: [0.0, 0.0, 0.0],
        }
    }
}

impl CameraPose {
    pub fn yaw(yaw_deg: f64) -> Self {
        CameraPose {
            yaw_deg,
            ..CameraPose::default()
        }
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        let yaw = Rotation3::from_axis_angle(&Vector3::y_axis(), self.yaw_deg.to_radians());
        let pitch = Rotation3::from_axis_angle(&Vector3::x_axis(), self.pitch_deg.to_radians());
        let roll = Rotation3::from_axis_angle(&Vector3::z_axis(), self.roll_deg.to_radians());
        roll * pitch * yaw
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub motion: MotionKind,
    /// Cycle speed multiplier; 2 traverses the trajectory twice as fast.
    pub speed: f64,
    /// Subject height; every body dimension scales with it.
    pub height: f64,
    #[serde(default)]
    pub camera: CameraPose,
    /// Standard deviation of z-only Gaussian noise, in world units.
    #[serde(default)]
    pub noise_sigma: f64,
    pub frames: usize,
    pub seed: u64,
    #[serde(default = "default_points")]
    pub points_per_frame: usize,
}

fn default_points() -> usize {
    300
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 4 {
            return Err(Error::BadParameter(format!(
                "need at least 4 frames, got {}",
                self.frames
            )));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::BadParameter(format!(
                "speed must be positive, got {}",
                self.speed
            )));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return Err(Error::BadParameter(format!(
                "height must be positive, got {}",
                self.height
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::BadParameter(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            )));
        }
        if self.points_per_frame < 20 {
            return Err(Error::BadParameter(format!(
                "need at least 20 points per frame, got {}",
                self.points_per_frame
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<SynthSpec> {
        let spec: SynthSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

pub struct SynthOutput {
    pub seq: PointCloudSequence,
    /// Per sampled point (same order in every frame): does it move over the
    /// sequence? Computed from the noise-free trajectories.
    pub moving: Vec<bool>,
}

/// Joint positions in body space (y up, origin under the pelvis), already
/// scaled by the subject height. Side index 0 is the left (-x) limb.
struct Joints {
    pelvis: Point3,
    neck: Point3,
    head: Point3,
    shoulder: [Point3; 2],
    elbow: [Point3; 2],
    hand: [Point3; 2],
    hip: [Point3; 2],
    knee: [Point3; 2],
    ankle: [Point3; 2],
}

fn pose_at(motion: MotionKind, phase: f64, h: f64) -> Joints {
    let side_sign = [-1.0, 1.0];
    // Smooth 0..1 oscillation used by the aperiodic-looking motions.
    let swell = 0.5 * (1.0 - phase.cos());

    let crouch = if motion == MotionKind::Sit { swell } else { 0.0 };
    let pelvis = Vector3::new(0.0, (0.52 - 0.17 * crouch) * h, 0.0);
    let neck = pelvis + Vector3::new(0.0, 0.33 * h, 0.0);
    let head = neck + Vector3::new(0.0, 0.09 * h, 0.0);

    let mut shoulder = [Vector3::zeros(); 2];
    let mut elbow = [Vector3::zeros(); 2];
    let mut hand = [Vector3::zeros(); 2];
    for i in 0..2 {
        let sx = side_sign[i];
        shoulder[i] = neck + Vector3::new(0.115 * sx * h, -0.02 * h, 0.0);
        // Rest pose: arms hang with a slight outward bend.
        elbow[i] = shoulder[i] + Vector3::new(0.05 * sx * h, -0.15 * h, 0.0);
        hand[i] = elbow[i] + Vector3::new(0.02 * sx * h, -0.14 * h, 0.0);
    }
    match motion {
        MotionKind::Wave => {
            // Right upper arm raised, forearm swinging about the elbow.
            elbow[1] = shoulder[1] + Vector3::new(0.13 * h, 0.07 * h, 0.0);
            let theta = 0.35 + 0.6 * phase.sin(); // from vertical, in-plane
            hand[1] = elbow[1] + 0.15 * h * Vector3::new(theta.sin(), theta.cos(), 0.0);
        }
        MotionKind::Punch => {
            // Right arm extends toward +z and retracts.
            elbow[1] = shoulder[1] + Vector3::new(0.06 * h, -0.03 * h, 0.10 * swell * h);
            hand[1] = elbow[1] + Vector3::new(0.01 * h, 0.0, (0.05 + 0.13 * swell) * h);
        }
        MotionKind::Raise => {
            // Both arms sweep from hanging to overhead, held straight.
            for i in 0..2 {
                let beta = 0.15 + (std::f64::consts::PI - 0.4) * swell;
                let dir = Vector3::new(beta.sin() * side_sign[i], -beta.cos(), 0.0);
                elbow[i] = shoulder[i] + 0.16 * h * dir;
                hand[i] = elbow[i] + 0.15 * h * dir;
            }
        }
        MotionKind::Sit => {}
    }

    let mut hip = [Vector3::zeros(); 2];
    let mut knee = [Vector3::zeros(); 2];
    let mut ankle = [Vector3::zeros(); 2];
    for i in 0..2 {
        let sx = side_sign[i];
        hip[i] = pelvis + Vector3::new(0.065 * sx * h, -0.02 * h, 0.0);
        // Knees travel forward as the body crouches; ankles stay planted.
        knee[i] = Vector3::new(
            hip[i].x,
            (0.27 - 0.05 * crouch) * h,
            0.12 * crouch * h,
        );
        ankle[i] = Vector3::new(hip[i].x, 0.03 * h, 0.0);
    }

    Joints {
        pelvis,
        neck,
        head,
        shoulder,
        elbow,
        hand,
        hip,
        knee,
        ankle,
    }
}

/// The cylindrical segments: (name, radius in units of height, sampling
/// weight). Endpoints come from `segment_endpoints`.
const SEGMENTS: [(&str, f64, f64); 9] = [
    ("torso", 0.085, 0.0281),
    ("upper_arm_l", 0.028, 0.0045),
    ("upper_arm_r", 0.028, 0.0045),
    ("forearm_l", 0.024, 0.0036),
    ("forearm_r", 0.024, 0.0036),
    ("thigh_l", 0.042, 0.0105),
    ("thigh_r", 0.042, 0.0105),
    ("shin_l", 0.032, 0.0080),
    ("shin_r", 0.032, 0.0080),
];
const HEAD_RADIUS: f64 = 0.055;
const HEAD_WEIGHT: f64 = 0.0095;

fn segment_endpoints(j: &Joints, seg: usize) -> (Point3, Point3) {
    match seg {
        0 => (j.pelvis, j.neck),
        1 => (j.shoulder[0], j.elbow[0]),
        2 => (j.shoulder[1], j.elbow[1]),
        3 => (j.elbow[0], j.hand[0]),
        4 => (j.elbow[1], j.hand[1]),
        5 => (j.hip[0], j.knee[0]),
        6 => (j.hip[1], j.knee[1]),
        7 => (j.knee[0], j.ankle[0]),
        8 => (j.knee[1], j.ankle[1]),
        _ => unreachable!(),
    }
}

/// A body-surface sample in segment-local coordinates, fixed for the whole
/// sequence.
enum Anchor {
    Segment {
        seg: usize,
        s: f64,
        angle: f64,
        rho: f64,
    },
    Head {
        dir: Vector3<f64>,
        rho: f64,
    },
}

fn perp_frame(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let n = axis.normalize();
    let reference = if n.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::z()
    };
    let e1 = n.cross(&reference).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

fn sample_anchors(n: usize, rng: &mut ChaCha8Rng) -> Vec<Anchor> {
    // Largest-remainder allocation of n samples over the body elements.
    let weights: Vec<f64> = SEGMENTS
        .iter()
        .map(|&(_, _, w)| w)
        .chain(std::iter::once(HEAD_WEIGHT))
        .collect();
    let total: f64 = weights.iter().sum();
    let ideal: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| x.floor() as usize).collect();
    let mut leftover = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - ideal[a].floor();
        let fb = ideal[b] - ideal[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }

    let mut anchors = Vec::with_capacity(n);
    for (elem, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            if elem < SEGMENTS.len() {
                anchors.push(Anchor::Segment {
                    seg: elem,
                    s: rng.gen::<f64>(),
                    angle: rng.gen::<f64>() * std::f64::consts::TAU,
                    rho: 0.85 + 0.15 * rng.gen::<f64>(),
                });
            } else {
                let dir: [f64; 3] = UnitSphere.sample(rng);
                anchors.push(Anchor::Head {
                    dir: Vector3::new(dir[0], dir[1], dir[2]),
                    rho: 0.85 + 0.15 * rng.gen::<f64>(),
                });
            }
        }
    }
    anchors
}

fn body_point(anchor: &Anchor, joints: &Joints, h: f64) -> Point3 {
    match anchor {
        Anchor::Segment { seg, s, angle, rho } => {
            let (a, b) = segment_endpoints(joints, *seg);
            let radius = SEGMENTS[*seg].1 * h;
            let axis = b - a;
            let (e1, e2) = perp_frame(&axis);
            a + *s * axis + radius * *rho * (angle.cos() * e1 + angle.sin() * e2)
        }
        Anchor::Head { dir, rho } => joints.head + HEAD_RADIUS * h * *rho * dir,
    }
}

/// Generate the sequence and its ground-truth motion labels.
pub fn synth_generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut sample_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let anchors = sample_anchors(spec.points_per_frame, &mut sample_rng);

    // Body-space trajectories first: they define the motion labels.
    let mut body_frames: Vec<Vec<Point3>> = Vec::with_capacity(spec.frames);
    for t in 0..spec.frames {
        let phase = std::f64::consts::TAU * spec.speed * t as f64 / CYCLE_FRAMES;
        let joints = pose_at(spec.motion, phase, spec.height);
        body_frames.push(
            anchors
                .iter()
                .map(|a| body_point(a, &joints, spec.height))
                .collect(),
        );
    }
    let moving: Vec<bool> = (0..anchors.len())
        .map(|i| {
            let p0 = body_frames[0][i];
            body_frames
                .iter()
                .any(|f| (f[i] - p0).norm() > 1e-9 * spec.height)
        })
        .collect();

    let rot = spec.camera.rotation();
    let tr = Vector3::new(
        spec.camera.translation[0],
        spec.camera.translation[1],
        spec.camera.translation[2],
    );
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    noise_rng.set_stream(1);
    let normal = if spec.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let frames: Vec<Vec<Point3>> = body_frames
        .into_iter()
        .map(|frame| {
            frame
                .into_iter()
                .map(|p| {
                    let mut q = rot * p + tr;
                    if let Some(n) = &normal {
                        q.z += n.sample(&mut noise_rng);
                    }
                    q
                })
                .collect()
        })
        .collect();

    Ok(SynthOutput {
        seq: PointCloudSequence::from_points(frames),
        moving,
    })
}

/// Rigidly transform every frame (used by invariance experiments).
pub fn transformed(
    seq: &PointCloudSequence,
    rot: &Rotation3<f64>,
    translation: &Vector3<f64>,
) -> PointCloudSequence {
    PointCloudSequence::from_points(
        seq.frames
            .iter()
            .map(|f| f.points.iter().map(|p| rot * p + translation).collect())
            .collect(),
    )
}
