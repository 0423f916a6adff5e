//! 16-bit depth image loading and pinhole back-projection.

use std::path::Path;

use image::DynamicImage;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloudSequence};
use crate::io::manifest::{CameraIntrinsics, SequenceManifest};

/// A raw depth frame: row-major u16 samples, zero meaning "no return".
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u16>,
}

/// Load a 16-bit grayscale PGM or PNG. Other pixel formats are rejected
/// rather than silently rescaled.
pub fn load_depth(path: &Path) -> Result<DepthImage> {
    decode_depth(image::open(path)?, || path.display().to_string())
}

pub fn load_depth_from_memory(bytes: &[u8]) -> Result<DepthImage> {
    decode_depth(image::load_from_memory(bytes)?, || "<memory>".to_string())
}

fn decode_depth(img: DynamicImage, name: impl Fn() -> String) -> Result<DepthImage> {
    match img {
        DynamicImage::ImageLuma16(buf) => Ok(DepthImage {
            width: buf.width(),
            height: buf.height(),
            data: buf.into_raw(),
        }),
        other => Err(Error::BadParameter(format!(
            "{}: expected 16-bit grayscale depth, found {:?}",
            name(),
            other.color()
        ))),
    }
}

/// Back-project every valid pixel through the pinhole model:
/// `z = d * depth_scale`, `x = (u - cx) z / fx`, `y = (v - cy) z / fy`.
pub fn backproject(depth: &DepthImage, intr: &CameraIntrinsics) -> Result<Vec<Point3>> {
    intr.validate()?;
    let expected = depth.width as usize * depth.height as usize;
    if depth.data.len() != expected {
        return Err(Error::LengthMismatch {
            left: expected,
            right: depth.data.len(),
        });
    }
    let mut points = Vec::new();
    for v in 0..depth.height {
        for u in 0..depth.width {
            let d = depth.data[(v * depth.width + u) as usize];
            if d == 0 {
                continue;
            }
            let z = d as f64 * intr.depth_scale;
            let x = (u as f64 - intr.cx) * z / intr.fx;
            let y = (v as f64 - intr.cy) * z / intr.fy;
            points.push(Point3::new(x, y, z));
        }
    }
    Ok(points)
}

/// Decode every frame of a manifest (in parallel) and back-project into a
/// sequence. `manifest_path` anchors relative frame paths.
pub fn convert(manifest: &SequenceManifest, manifest_path: &Path) -> Result<PointCloudSequence> {
    manifest.validate()?;
    let paths = manifest.resolved_frames(manifest_path);
    let frames: Vec<Vec<Point3>> = paths
        .par_iter()
        .map(|p| backproject(&load_depth(p)?, &manifest.intrinsics))
        .collect::<Result<_>>()?;
    Ok(PointCloudSequence::from_points(frames))
}
