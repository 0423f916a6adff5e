//! Geometric action descriptors for 3D pointcloud sequences.
//!
//! The crate extracts view-, scale- and speed-invariant descriptors from
//! sequences of 3D pointclouds and classifies actions across camera views:
//!
//! - [`geom`] — support volumes, covariance and sign-disambiguated
//!   eigenbases, the numeric substrate for everything else.
//! - [`descriptor`] — the 60-dimensional histogram of oriented principal
//!   components (HOPC) over the 20 dodecahedron directions.
//! - [`detect`] — spatio-temporal keypoint (STK) detection with eigenratio
//!   pruning, quality scoring and non-maximum suppression.
//! - [`local`] — view-invariant Local HOPC cell descriptors at STKs and the
//!   view-dependent holistic variant over a whole sequence.
//! - [`stkd`] — the 600-bin histogram of the normalized 4D STK distribution
//!   over the vertices of the 120-cell polychoron.
//! - [`scale`] — height-based spatial radius and automatic per-point
//!   temporal scale selection.
//! - [`pipeline`] — k-means codebooks, F-score codeword mining,
//!   histogram-intersection-kernel SVM and the combined sequence descriptor.
//! - [`io`] — binary containers, depth-image back-projection and manifests.
//! - [`synth`] — deterministic articulated motion generator for benchmarks.
//! - [`eval`] — cross-view train/test protocol driver.

pub mod descriptor;
pub mod detect;
pub mod error;
pub mod eval;
pub mod geom;
pub mod io;
pub mod local;
pub mod pipeline;
pub mod scale;
pub mod stkd;
pub mod synth;

pub use error::{Error, Result};
