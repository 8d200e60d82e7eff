//! End-to-end clustering: normalize, filter at several scales, find
//! spatial-spectral neighbors, link pixels to random anchors, embed and
//! discretize with k-means.

use std::time::{Duration, Instant};

use ndarray::Array2;

use crate::anchor::{build_graph, sample_anchors};
use crate::cube::{build_coordinates, normalize_cube, GroundTruth, HsiCube};
use crate::error::{Error, Result};
use crate::filter::{multiscale_wmf, DEFAULT_GAMMA0, DEFAULT_SCALES};
use crate::kmeans::kmeans;
use crate::metrics::{evaluate, Evaluation};
use crate::spectral::{embed, SpectralEmbedding};
use crate::ssdm::{find_neighbors, CandidateMode};

/// Added to the run seed for anchor sampling.
pub const ANCHOR_SEED_OFFSET: u64 = 1;
/// Added to the run seed for k-means.
pub const KMEANS_SEED_OFFSET: u64 = 2;

pub const DEFAULT_NEIGHBORS: usize = 5;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SscagParams {
    pub clusters: usize,
    pub anchors: usize,
    pub neighbors: usize,
    pub alpha: f64,
    pub gamma0: f64,
    pub scales: Vec<usize>,
    pub seed: u64,
    pub restarts: usize,
    pub candidates: CandidateMode,
    /// Scale embedding rows to unit length before k-means.
    pub normalize_rows: bool,
}

impl SscagParams {
    pub fn new(clusters: usize, anchors: usize, alpha: f64) -> Self {
        Self {
            clusters,
            anchors,
            neighbors: DEFAULT_NEIGHBORS,
            alpha,
            gamma0: DEFAULT_GAMMA0,
            scales: DEFAULT_SCALES.to_vec(),
            seed: 0,
            restarts: DEFAULT_RESTARTS,
            candidates: CandidateMode::Exact,
            normalize_rows: false,
        }
    }
}

/// Wall-clock duration of each stage, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTimings {
    pub stages: Vec<(&'static str, Duration)>,
}

impl StageTimings {
    fn time<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push((name, start.elapsed()));
        out
    }

    pub fn get(&self, name: &str) -> Option<Duration> {
        self.stages.iter().find(|(n, _)| *n == name).map(|(_, d)| *d)
    }

    pub fn total(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Cluster of every pixel, `1..=clusters`.
    pub labels: Vec<u32>,
    pub embedding: SpectralEmbedding,
    pub params: SscagParams,
    pub timings: StageTimings,
    pub evaluation: Option<Evaluation>,
}

fn check_ground_truth(cube: &HsiCube, gt: Option<&GroundTruth>) -> Result<()> {
    if let Some(gt) = gt {
        if (gt.height(), gt.width()) != (cube.height(), cube.width()) {
            return Err(Error::Shape {
                expected_h: cube.height(),
                expected_w: cube.width(),
                found_h: gt.height(),
                found_w: gt.width(),
            });
        }
    }
    Ok(())
}

fn to_labels(assignment: &[usize]) -> Vec<u32> {
    assignment.iter().map(|&l| l as u32 + 1).collect()
}

/// Runs the full pipeline. Clustering uses every pixel; `gt` only feeds the
/// evaluation.
pub fn run_sscag(
    cube: &HsiCube,
    gt: Option<&GroundTruth>,
    params: &SscagParams,
) -> Result<ClusteringResult> {
    check_ground_truth(cube, gt)?;
    if params.neighbors == 0 || params.neighbors >= params.anchors {
        return Err(Error::InvalidParameter(format!(
            "neighbor count {} must lie in 1..{} (anchor count)",
            params.neighbors, params.anchors
        )));
    }
    let mut timings = StageTimings::default();

    let normalized = timings.time("normalize", || normalize_cube(cube))?;
    let coords = build_coordinates(cube.height(), cube.width());
    let stack = timings.time("filter", || {
        multiscale_wmf(&normalized, &params.scales, params.gamma0)
    })?;
    let summary = timings.time("neighbors", || {
        find_neighbors(&normalized, &stack, &coords, params.neighbors, params.candidates)
    })?;
    let anchors = timings.time("anchors", || {
        sample_anchors(
            &normalized,
            params.anchors,
            params.seed.wrapping_add(ANCHOR_SEED_OFFSET),
        )
    })?;
    let graph = timings.time("graph", || {
        build_graph(&normalized, &summary, &anchors, params.neighbors, params.alpha)
    })?;
    let embedding = timings.time("embed", || embed(&graph, params.clusters))?;
    let clustering = timings.time("kmeans", || {
        let features = if params.normalize_rows {
            unit_rows(&embedding.f)
        } else {
            embedding.f.clone()
        };
        kmeans(
            features.view(),
            params.clusters,
            params.seed.wrapping_add(KMEANS_SEED_OFFSET),
            params.restarts,
        )
    })?;

    let labels = to_labels(&clustering.best.labels);
    let evaluation = gt.map(|g| evaluate(&labels, g.labels())).transpose()?;
    Ok(ClusteringResult {
        labels,
        embedding,
        params: params.clone(),
        timings,
        evaluation,
    })
}

fn unit_rows(f: &Array2<f64>) -> Array2<f64> {
    let mut out = f.clone();
    for mut row in out.rows_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|x| x / norm);
        }
    }
    out
}

/// Plain k-means on the normalized spectra, labels `1..=clusters`.
pub fn kmeans_baseline(cube: &HsiCube, clusters: usize, seed: u64, restarts: usize) -> Result<Vec<u32>> {
    let normalized = normalize_cube(cube)?;
    let res = kmeans(
        normalized.values(),
        clusters,
        seed.wrapping_add(KMEANS_SEED_OFFSET),
        restarts,
    )?;
    Ok(to_labels(&res.best.labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_scene, SceneSpec};

    #[test]
    fn noiseless_blocks_are_recovered() {
        let spec = SceneSpec {
            noise: 0.0,
            ..SceneSpec::blocks(12, 12, 6, 4)
        };
        let (cube, gt) = synth_scene(&spec, 0).unwrap();
        let mut params = SscagParams::new(4, 24, 0.6);
        params.scales = vec![3, 5];
        let res = run_sscag(&cube, Some(&gt), &params).unwrap();
        assert_eq!(res.evaluation.unwrap().overall_accuracy, 1.0);
        assert_eq!(res.timings.stages.len(), 7);
    }

    #[test]
    fn rejects_bad_neighbor_count() {
        let spec = SceneSpec::blocks(6, 6, 4, 2);
        let (cube, _) = synth_scene(&spec, 0).unwrap();
        let mut params = SscagParams::new(2, 5, 0.5);
        params.neighbors = 5;
        assert!(matches!(
            run_sscag(&cube, None, &params),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn ground_truth_shape_must_match() {
        let spec = SceneSpec::blocks(6, 6, 4, 2);
        let (cube, _) = synth_scene(&spec, 0).unwrap();
        let gt = GroundTruth::new(6, 5, vec![1; 30]).unwrap();
        let params = SscagParams::new(2, 10, 0.5);
        assert!(matches!(
            run_sscag(&cube, Some(&gt), &params),
            Err(Error::Shape { .. })
        ));
    }
}
