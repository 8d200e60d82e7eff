//! Spatial-spectral anchor-graph clustering for hyperspectral images.
//!
//! The pipeline, in order:
//!
//! 1. [`cube::normalize_cube`] scales every band into `[0, 1]`.
//! 2. [`filter::multiscale_wmf`] smooths the cube with a spectrally weighted
//!    mean over several window sizes.
//! 3. [`ssdm::find_neighbors`] finds, for every pixel, the `k` nearest pixels
//!    under a patch-based spatial-spectral distance, pooled across scales.
//! 4. [`anchor::sample_anchors`] and [`anchor::build_graph`] link each pixel
//!    to `k` random anchors with closed-form simplex weights.
//! 5. [`spectral::embed`] takes the leading singular subspace of the
//!    degree-normalized anchor graph through its small Gram matrix.
//! 6. [`kmeans::kmeans`] discretizes the embedding.
//!
//! [`pipeline::run_sscag`] chains the steps; [`metrics`] scores a clustering
//! against ground truth and [`io`] reads and writes the file formats.

pub mod anchor;
pub mod cube;
pub mod error;
pub mod filter;
pub mod io;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod spectral;
pub mod ssdm;
pub mod synth;

pub use cube::{build_coordinates, normalize_cube, CoordinateMatrix, GroundTruth, HsiCube};
pub use error::{Error, Result};
pub use pipeline::{kmeans_baseline, run_sscag, ClusteringResult, SscagParams};
pub use ssdm::CandidateMode;
pub use synth::{synth_scene, SceneSpec};
