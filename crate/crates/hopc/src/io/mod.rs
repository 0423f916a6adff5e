//! Readers and writers for the on-disk formats: the `PCSQ` sequence
//! container, depth-image ingestion via JSON manifests, keypoint and
//! descriptor containers, and PLY export.

pub(crate) mod bin;
pub mod codebook;
pub mod depth;
pub mod manifest;
pub mod pcseq;
pub mod ply;
pub mod stks;

pub use codebook::{load_codebook, save_codebook};
pub use depth::{backproject, convert, load_depth, DepthImage};
pub use manifest::{CameraIntrinsics, SequenceManifest};
pub use pcseq::{load_pcseq, save_pcseq};
pub use stks::{load_desc, load_stks, save_desc, save_stks, DescFile, StkFile};
