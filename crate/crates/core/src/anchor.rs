//! Anchor sampling and the sparse pixel-to-anchor graph.
//!
//! Each pixel is linked to its `k` closest anchors under the combined cost
//! `E_ij = |x_i - u_j|^2 + alpha * |x~_i - u_j|^2`, where `x~_i` is the mean
//! of the pixel's spatial-spectral neighbors. The weights are the exact
//! minimizer of `sum_j E_ij z_ij + gamma_i z_ij^2` over the probability
//! simplex, with `gamma_i` chosen per row so that exactly the `k` smallest
//! costs receive weight:
//!
//! ```text
//! z_ij = (E_i,k+1 - E_ij) / (k E_i,k+1 - sum_{j'<=k} E_ij')
//! ```
//!
//! The normalized graph `S = Z diag(deg)^-1 Z^T` is doubly stochastic and is
//! only formed explicitly by [`materialize_s`], for testing.

use ndarray::{Array2, ArrayView1};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cube::HsiCube;
use crate::error::{Error, Result};
use crate::ssdm::NeighborSummary;

/// Largest pixel count accepted by [`materialize_s`].
pub const DENSE_GRAPH_LIMIT: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    pub anchors: Array2<f64>,
    pub source_ids: Vec<usize>,
    pub seed: u64,
}

impl AnchorSet {
    pub fn len(&self) -> usize {
        self.source_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_ids.is_empty()
    }
}

/// Draws `m` distinct pixels uniformly at random.
pub fn sample_anchors(cube: &HsiCube, m: usize, seed: u64) -> Result<AnchorSet> {
    let n = cube.n_pixels();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "anchor count {m} must lie in 1..={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source_ids = index::sample(&mut rng, n, m).into_vec();
    let d = cube.bands();
    let mut anchors = Array2::zeros((m, d));
    for (row, &src) in source_ids.iter().enumerate() {
        anchors.row_mut(row).assign(&cube.pixel(src));
    }
    Ok(AnchorSet {
        anchors,
        source_ids,
        seed,
    })
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `E_ij = |x_i - u_j|^2 + alpha |x~_i - u_j|^2` for every anchor `u_j`.
pub fn combined_distances(
    pixel: ArrayView1<'_, f64>,
    neighbor_mean: ArrayView1<'_, f64>,
    anchors: &Array2<f64>,
    alpha: f64,
) -> Vec<f64> {
    anchors
        .rows()
        .into_iter()
        .map(|u| squared_distance(pixel, u) + alpha * squared_distance(neighbor_mean, u))
        .collect()
}

/// Closed-form simplex weights for one pixel: `(anchor, weight)` for the `k`
/// smallest costs, in ascending cost order (ties to the lower anchor index).
/// When the `k + 1` smallest costs coincide the weights are uniform `1/k`.
pub fn assign_row(costs: &[f64], k: usize) -> Result<Vec<(usize, f64)>> {
    let m = costs.len();
    if k == 0 || k >= m {
        return Err(Error::InvalidParameter(format!(
            "neighbor count {k} must lie in 1..{m} for {m} anchors"
        )));
    }
    let cmp = |a: &usize, b: &usize| costs[*a].total_cmp(&costs[*b]).then(a.cmp(b));
    let mut order: Vec<usize> = (0..m).collect();
    order.select_nth_unstable_by(k, cmp);
    let next = costs[order[k]];
    order.truncate(k);
    order.sort_unstable_by(cmp);

    let sum: f64 = order.iter().map(|&j| costs[j]).sum();
    let denom = k as f64 * next - sum;
    if denom <= 0.0 {
        let w = 1.0 / k as f64;
        return Ok(order.into_iter().map(|j| (j, w)).collect());
    }
    Ok(order
        .into_iter()
        .map(|j| (j, (next - costs[j]) / denom))
        .collect())
}

/// Row-stochastic `n x m` pixel-to-anchor matrix with exactly `k` stored
/// entries per row (some may be zero when costs tie at the cut-off).
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorGraph {
    n: usize,
    m: usize,
    k: usize,
    alpha: f64,
    indices: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl AnchorGraph {
    /// Assembles a graph from explicit rows. Every row must hold `k` entries.
    pub fn from_rows(m: usize, k: usize, alpha: f64, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let n = rows.len();
        let mut indices = Vec::with_capacity(n * k);
        let mut weights = Vec::with_capacity(n * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidData(format!(
                    "row {i} has {} entries, expected {k}",
                    row.len()
                )));
            }
            for &(j, z) in row {
                if j >= m || !(z >= 0.0 && z.is_finite()) {
                    return Err(Error::InvalidData(format!(
                        "row {i}: invalid entry ({j}, {z})"
                    )));
                }
                indices.push(j);
                weights.push(z);
            }
        }
        let mut degrees = vec![0.0; m];
        for (&j, &z) in indices.iter().zip(&weights) {
            degrees[j] += z;
        }
        Ok(Self {
            n,
            m,
            k,
            alpha,
            indices,
            weights,
            degrees,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.n
    }

    pub fn n_anchors(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Stored `(anchor indices, weights)` of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = i * self.k..(i + 1) * self.k;
        (&self.indices[r.clone()], &self.weights[r])
    }

    /// Column sums of `Z`.
    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Anchors with positive degree, ascending.
    pub fn active_anchors(&self) -> Vec<usize> {
        (0..self.m).filter(|&j| self.degrees[j] > 0.0).collect()
    }

    /// Dense `n x m'` matrix `A = Z diag(deg)^-1/2` over the active anchors.
    pub fn scaled_dense(&self) -> Array2<f64> {
        let active = self.active_anchors();
        let mut column = vec![usize::MAX; self.m];
        for (c, &j) in active.iter().enumerate() {
            column[j] = c;
        }
        let scale: Vec<f64> = self.degrees.iter().map(|d| d.sqrt().recip()).collect();
        let mut a = Array2::zeros((self.n, active.len()));
        for i in 0..self.n {
            let (idx, w) = self.row(i);
            for (&j, &z) in idx.iter().zip(w) {
                if z > 0.0 {
                    a[[i, column[j]]] += z * scale[j];
                }
            }
        }
        a
    }
}

/// Builds `Z` for every pixel and accumulates the anchor degrees in pixel order.
pub fn build_graph(
    cube: &HsiCube,
    summary: &NeighborSummary,
    anchors: &AnchorSet,
    k: usize,
    alpha: f64,
) -> Result<AnchorGraph> {
    let n = cube.n_pixels();
    if summary.n_pixels() != n {
        return Err(Error::InvalidData(format!(
            "neighbor summary covers {} pixels, cube has {n}",
            summary.n_pixels()
        )));
    }
    if anchors.anchors.ncols() != cube.bands() {
        return Err(Error::InvalidData(format!(
            "anchors have {} bands, cube has {}",
            anchors.anchors.ncols(),
            cube.bands()
        )));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be non-negative, got {alpha}"
        )));
    }
    let means = summary.neighbor_mean();
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let costs = combined_distances(cube.pixel(i), means.row(i), &anchors.anchors, alpha);
            assign_row(&costs, k)
        })
        .collect::<Result<Vec<_>>>()?;
    AnchorGraph::from_rows(anchors.len(), k, alpha, &rows)
}

/// Dense `S = Z diag(deg)^-1 Z^T` over the active anchors. Test-scale only.
pub fn materialize_s(graph: &AnchorGraph) -> Result<Array2<f64>> {
    if graph.n_pixels() > DENSE_GRAPH_LIMIT {
        return Err(Error::SizeGuard {
            n: graph.n_pixels(),
            limit: DENSE_GRAPH_LIMIT,
        });
    }
    let a = graph.scaled_dense();
    Ok(a.dot(&a.t()))
}
