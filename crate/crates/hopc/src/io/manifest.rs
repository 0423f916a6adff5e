//! JSON sequence manifests: a frame list plus the camera model needed to
//! back-project depth images.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal lengths in pixels.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels.
    pub cx: f64,
    pub cy: f64,
    /// Meters per stored depth unit.
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fx", self.fx),
            ("fy", self.fy),
            ("depth_scale", self.depth_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::BadParameter(format!(
                    "intrinsics {name} must be positive and finite, got {v}"
                )));
            }
        }
        if !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::BadParameter(
                "principal point must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub id: String,
    pub action_label: String,
    pub subject_id: String,
    pub view_id: String,
    /// Depth frame files (16-bit PGM or 16-bit grayscale PNG), in temporal
    /// order, relative to the manifest location unless absolute.
    pub frames: Vec<PathBuf>,
    pub intrinsics: CameraIntrinsics,
    /// Unit of the resulting coordinates, e.g. "meters".
    pub units: String,
    /// Optional declared view set; when present, `view_id` must be in it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub views: Option<Vec<String>>,
}

impl SequenceManifest {
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.frames.is_empty() {
            return Err(Error::BadParameter(format!(
                "manifest {:?} lists no frames",
                self.id
            )));
        }
        if let Some(views) = &self.views {
            if !views.contains(&self.view_id) {
                return Err(Error::BadParameter(format!(
                    "view {:?} is not in the declared view set {views:?}",
                    self.view_id
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<SequenceManifest> {
        let m: SequenceManifest = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<SequenceManifest> {
        SequenceManifest::from_json(&std::fs::read_to_string(path)?)
    }

    /// Frame paths resolved against the manifest's directory.
    pub fn resolved_frames(&self, manifest_path: &Path) -> Vec<PathBuf> {
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        self.frames
            .iter()
            .map(|f| if f.is_absolute() { f.clone() } else { base.join(f) })
            .collect()
    }
}
