//! ASCII PLY export of detected keypoints, for quick inspection in any
//! pointcloud viewer.

use std::fmt::Write as _;
use std::path::Path;

use crate::detect::StkRecord;
use crate::error::Result;

/// One vertex per keypoint with its frame, selected window, and quality as
/// extra properties.
pub fn ply_string(stks: &[StkRecord]) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\ncomment spatio-temporal keypoints\n");
    let _ = writeln!(out, "element vertex {}", stks.len());
    out.push_str(
        "property float x\nproperty float y\nproperty float z\n\
         property uint frame\nproperty uint tau\nproperty float quality\n\
         end_header\n",
    );
    for s in stks {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            s.position.x as f32,
            s.position.y as f32,
            s.position.z as f32,
            s.t,
            s.tau_star,
            s.quality as f32
        );
    }
    out
}

pub fn export_ply(path: &Path, stks: &[StkRecord]) -> Result<()> {
    Ok(std::fs::write(path, ply_string(stks))?)
}
