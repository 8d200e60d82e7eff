//! Stage timings over a ladder of synthetic scene sizes and the fitted
//! log-log growth rate of each stage.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use sscag::anchor::{build_graph, sample_anchors};
use sscag::filter::{multiscale_wmf, DEFAULT_GAMMA0};
use sscag::kmeans::kmeans;
use sscag::spectral::embed;
use sscag::ssdm::find_neighbors;
use sscag::{build_coordinates, normalize_cube, synth_scene, CandidateMode, SceneSpec};

use crate::error::Result;

/// Stages in execution order.
pub const STAGES: [&str; 7] = [
    "normalize",
    "filter",
    "neighbors",
    "anchors",
    "graph",
    "embed",
    "kmeans",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub bands: usize,
    pub classes: usize,
    pub anchors: usize,
    pub neighbors: usize,
    pub alpha: f64,
    /// Single filter and patch window.
    pub window: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Quick stages are repeated until this much time has accumulated.
    pub min_time: Duration,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![4096, 8192, 16384],
            bands: 8,
            classes: 4,
            anchors: 64,
            neighbors: 5,
            alpha: 0.6,
            window: 3,
            restarts: 1,
            seed: 0,
            min_time: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub height: usize,
    pub width: usize,
    /// Mean seconds per call, indexed like [`STAGES`].
    pub seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln t` against `ln n`, indexed like [`STAGES`].
    pub slopes: Vec<f64>,
}

impl BenchReport {
    pub fn slope(&self, stage: &str) -> Option<f64> {
        STAGES.iter().position(|s| *s == stage).map(|i| self.slopes[i])
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        write!(out, "{:>8} {:>9}", "n", "grid").unwrap();
        for s in STAGES {
            write!(out, " {s:>11}").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            let grid = format!("{}x{}", row.height, row.width);
            write!(out, "{:>8} {grid:>9}", row.n).unwrap();
            for t in &row.seconds {
                write!(out, " {t:>11.6}").unwrap();
            }
            out.push('\n');
        }
        write!(out, "{:>8} {:>9}", "slope", "").unwrap();
        for s in &self.slopes {
            write!(out, " {s:>11.3}").unwrap();
        }
        out.push('\n');
        out
    }
}

/// Most nearly square `h x w` grid with `h * w = n` and `h <= w`.
pub fn grid_shape(n: usize) -> (usize, usize) {
    let mut h = (n as f64).sqrt() as usize;
    while h > 1 && !n.is_multiple_of(h) {
        h -= 1;
    }
    let h = h.max(1);
    (h, n / h)
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs `f` until `min_time` has elapsed (at least once) and returns the last
/// output with the mean time per call.
fn timed<T>(min_time: Duration, mut f: impl FnMut() -> sscag::Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let mut calls = 0u32;
    loop {
        let out = f()?;
        calls += 1;
        let elapsed = start.elapsed();
        if elapsed >= min_time {
            return Ok((out, elapsed.as_secs_f64() / calls as f64));
        }
    }
}

fn bench_size(config: &BenchConfig, n: usize) -> Result<BenchRow> {
    let (height, width) = grid_shape(n);
    let spec = SceneSpec::blocks(height, width, config.bands, config.classes);
    let (cube, _) = synth_scene(&spec, config.seed)?;
    let coords = build_coordinates(height, width);
    let min = config.min_time;
    let mut seconds = Vec::with_capacity(STAGES.len());

    let (normalized, t) = timed(min, || normalize_cube(&cube))?;
    seconds.push(t);
    let (stack, t) = timed(min, || {
        multiscale_wmf(&normalized, &[config.window], DEFAULT_GAMMA0)
    })?;
    seconds.push(t);
    let (summary, t) = timed(min, || {
        find_neighbors(&normalized, &stack, &coords, config.neighbors, CandidateMode::Exact)
    })?;
    seconds.push(t);
    let (anchors, t) = timed(min, || sample_anchors(&normalized, config.anchors, config.seed))?;
    seconds.push(t);
    let (graph, t) = timed(min, || {
        build_graph(&normalized, &summary, &anchors, config.neighbors, config.alpha)
    })?;
    seconds.push(t);
    let (embedding, t) = timed(min, || embed(&graph, config.classes))?;
    seconds.push(t);
    let (_, t) = timed(min, || {
        kmeans(embedding.f.view(), config.classes, config.seed, config.restarts)
    })?;
    seconds.push(t);

    Ok(BenchRow {
        n,
        height,
        width,
        seconds,
    })
}

pub fn run(config: &BenchConfig) -> Result<BenchReport> {
    let rows = config
        .sizes
        .iter()
        .map(|&n| bench_size(config, n))
        .collect::<Result<Vec<_>>>()?;
    let ns: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let slopes = (0..STAGES.len())
        .map(|s| {
            let ts: Vec<f64> = rows.iter().map(|r| r.seconds[s]).collect();
            loglog_slope(&ns, &ts)
        })
        .collect();
    Ok(BenchReport { rows, slopes })
}
