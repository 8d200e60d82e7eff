//! Spatial-spectral distance and neighbor discovery.
//!
//! The distance from pixel `i` to pixel `j` compares every member of the
//! patch of `i` (the pixel and its clipped window, taken from the normalized
//! cube) against the filtered spectrum of `j`. Members are weighted by a
//! Gaussian kernel on their spatial distance to `j`, with bandwidth equal to
//! the mean member-to-`j` distance. The measure is not symmetric.

use std::cmp::Ordering;

use ndarray::Array2;
use rayon::prelude::*;

use crate::cube::{CoordinateMatrix, HsiCube};
use crate::error::{Error, Result};
use crate::filter::{window_bounds, FilteredStack};

/// Which pixels are considered as neighbors of a query pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CandidateMode {
    /// Every other pixel.
    #[default]
    Exact,
    /// Pixels inside a square window of the given side centred on the query.
    Window(usize),
}

/// Patch of pixel `i`: indices, coordinates and spectra, row-major.
struct Patch {
    coords: Vec<[f64; 2]>,
    spectra: Vec<f64>,
}

impl Patch {
    fn new(i: usize, raw: &HsiCube, coords: &CoordinateMatrix, window: usize) -> Self {
        let (h, w, d) = (raw.height(), raw.width(), raw.bands());
        let ((r0, r1), (c0, c1)) = window_bounds(i, window / 2, h, w);
        let size = (r1 - r0 + 1) * (c1 - c0 + 1);
        let mut patch = Patch {
            coords: Vec::with_capacity(size),
            spectra: Vec::with_capacity(size * d),
        };
        let src = raw.as_slice();
        for r in r0..=r1 {
            for c in c0..=c1 {
                let p = r * w + c;
                patch.coords.push(coords.get(p));
                patch.spectra.extend_from_slice(&src[p * d..(p + 1) * d]);
            }
        }
        patch
    }

    fn distance_to(&self, target_coord: [f64; 2], target_spectrum: &[f64], scratch: &mut Vec<f64>) -> f64 {
        let d = target_spectrum.len();
        scratch.clear();
        let mut sigma = 0.0;
        for c in &self.coords {
            let dr = c[0] - target_coord[0];
            let dc = c[1] - target_coord[1];
            let s = dr * dr + dc * dc;
            sigma += s.sqrt();
            scratch.push(s);
        }
        sigma /= self.coords.len() as f64;
        if sigma == 0.0 {
            return 0.0;
        }
        if self.coords.len() == 1 {
            // a lone member's weight cancels
            return spectral_distance(&self.spectra, target_spectrum);
        }
        let inv_sigma2 = 1.0 / (sigma * sigma);
        let mut num = 0.0;
        let mut den = 0.0;
        for (h, &s) in scratch.iter().enumerate() {
            let v = (-s * inv_sigma2).exp();
            num += v * spectral_distance(&self.spectra[h * d..(h + 1) * d], target_spectrum);
            den += v;
        }
        num / den
    }
}

fn spectral_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Spatial-spectral distance from pixel `i` to pixel `j` for an odd window `w`
/// (`w = 1` gives a patch of `i` alone).
pub fn ssdm_distance(
    i: usize,
    j: usize,
    raw: &HsiCube,
    filtered: &HsiCube,
    coords: &CoordinateMatrix,
    window: usize,
) -> f64 {
    let patch = Patch::new(i, raw, coords, window);
    let d = filtered.bands();
    let target = &filtered.as_slice()[j * d..(j + 1) * d];
    patch.distance_to(coords.get(j), target, &mut Vec::new())
}

fn by_distance(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))
}

/// Keeps the `k` smallest `(index, distance)` pairs, ascending, ties to the
/// smaller index.
fn k_smallest(mut pairs: Vec<(usize, f64)>, k: usize) -> Vec<(usize, f64)> {
    if k < pairs.len() {
        pairs.select_nth_unstable_by(k, by_distance);
        pairs.truncate(k);
    }
    pairs.sort_unstable_by(by_distance);
    pairs
}

fn candidates(i: usize, h: usize, w: usize, mode: CandidateMode) -> Vec<usize> {
    match mode {
        CandidateMode::Exact => (0..h * w).filter(|&j| j != i).collect(),
        CandidateMode::Window(side) => {
            let ((r0, r1), (c0, c1)) = window_bounds(i, side / 2, h, w);
            (r0..=r1)
                .flat_map(|r| (c0..=c1).map(move |c| r * w + c))
                .filter(|&j| j != i)
                .collect()
        }
    }
}

/// The `k` nearest pixels to `i` under the spatial-spectral distance at one
/// filter scale.
pub fn knn_per_scale(
    i: usize,
    raw: &HsiCube,
    filtered: &HsiCube,
    coords: &CoordinateMatrix,
    k: usize,
    window: usize,
    mode: CandidateMode,
) -> Result<Vec<(usize, f64)>> {
    let cands = candidates(i, raw.height(), raw.width(), mode);
    if cands.len() < k {
        return Err(Error::InfeasibleK {
            pixel: i,
            available: cands.len(),
            k,
        });
    }
    let patch = Patch::new(i, raw, coords, window);
    let d = filtered.bands();
    let fs = filtered.as_slice();
    let mut scratch = Vec::with_capacity(window * window);
    let pairs = cands
        .into_iter()
        .map(|j| {
            let dist = patch.distance_to(coords.get(j), &fs[j * d..(j + 1) * d], &mut scratch);
            (j, dist)
        })
        .collect();
    Ok(k_smallest(pairs, k))
}

/// Merges per-scale neighbor lists: each pixel keeps its smallest distance,
/// then the `k` smallest overall are returned. The pixel index in an
/// `InfeasibleK` error is left as `usize::MAX` for the caller to fill in.
pub fn pool_scales(per_scale: &[Vec<(usize, f64)>], k: usize) -> Result<Vec<(usize, f64)>> {
    let mut all: Vec<(usize, f64)> = per_scale.iter().flatten().copied().collect();
    all.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    all.dedup_by_key(|p| p.0);
    if all.len() < k {
        return Err(Error::InfeasibleK {
            pixel: usize::MAX,
            available: all.len(),
            k,
        });
    }
    Ok(k_smallest(all, k))
}

/// Pooled spatial-spectral neighbors of every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSummary {
    k: usize,
    ids: Vec<usize>,
    distances: Vec<f64>,
    neighbor_mean: Array2<f64>,
}

impl NeighborSummary {
    /// Builds the summary from per-pixel neighbor lists of length `k`, taking
    /// neighbor spectra from `raw`.
    pub fn from_lists(raw: &HsiCube, lists: Vec<Vec<(usize, f64)>>, k: usize) -> Result<Self> {
        let n = raw.n_pixels();
        let d = raw.bands();
        if lists.len() != n {
            return Err(Error::InvalidData(format!(
                "{} neighbor lists for {n} pixels",
                lists.len()
            )));
        }
        let mut ids = Vec::with_capacity(n * k);
        let mut distances = Vec::with_capacity(n * k);
        let mut neighbor_mean = Array2::zeros((n, d));
        let src = raw.as_slice();
        for (i, list) in lists.into_iter().enumerate() {
            if list.len() != k {
                return Err(Error::InfeasibleK {
                    pixel: i,
                    available: list.len(),
                    k,
                });
            }
            let mut mean = neighbor_mean.row_mut(i);
            for &(j, dist) in &list {
                ids.push(j);
                distances.push(dist);
                for (m, v) in mean.iter_mut().zip(&src[j * d..(j + 1) * d]) {
                    *m += v;
                }
            }
            mean.mapv_inplace(|m| m / k as f64);
        }
        Ok(Self {
            k,
            ids,
            distances,
            neighbor_mean,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_pixels(&self) -> usize {
        self.neighbor_mean.nrows()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.ids[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Mean spectrum of the neighbors of every pixel, `n x d`.
    pub fn neighbor_mean(&self) -> &Array2<f64> {
        &self.neighbor_mean
    }
}

/// Neighbor search at every scale of `stack` followed by cross-scale pooling.
pub fn find_neighbors(
    raw: &HsiCube,
    stack: &FilteredStack,
    coords: &CoordinateMatrix,
    k: usize,
    mode: CandidateMode,
) -> Result<NeighborSummary> {
    if k == 0 {
        return Err(Error::InvalidParameter("neighbor count must be positive".into()));
    }
    let n = raw.n_pixels();
    let lists = (0..n)
        .into_par_iter()
        .map(|i| {
            let per_scale = stack
                .iter()
                .map(|(w, filtered)| knn_per_scale(i, raw, filtered, coords, k, w, mode))
                .collect::<Result<Vec<_>>>()?;
            pool_scales(&per_scale, k).map_err(|e| match e {
                Error::InfeasibleK { available, k, .. } => Error::InfeasibleK {
                    pixel: i,
                    available,
                    k,
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    NeighborSummary::from_lists(raw, lists, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::build_coordinates;
    use crate::filter::multiscale_wmf;

    fn line(vals: &[f64]) -> HsiCube {
        let values = Array2::from_shape_vec((vals.len(), 1), vals.to_vec()).unwrap();
        HsiCube::new(1, vals.len(), values).unwrap()
    }

    #[test]
    fn constant_cube_has_zero_distance() {
        let cube = HsiCube::new(3, 3, Array2::from_elem((9, 2), 0.4)).unwrap();
        let coords = build_coordinates(3, 3);
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(ssdm_distance(i, j, &cube, &cube, &coords, 3), 0.0);
            }
        }
    }

    #[test]
    fn unit_window_is_spectral_distance() {
        let raw = line(&[0.1, 0.7, 0.3]);
        let filtered = line(&[0.2, 0.2, 0.9]);
        let coords = build_coordinates(1, 3);
        let expected = ((0.1f64 - 0.9) * (0.1 - 0.9)).sqrt();
        assert_eq!(ssdm_distance(0, 2, &raw, &filtered, &coords, 1), expected);
        assert_eq!(ssdm_distance(1, 1, &raw, &filtered, &coords, 1), 0.0);
    }

    #[test]
    fn constant_cube_neighbors_follow_index() {
        let cube = HsiCube::new(3, 3, Array2::from_elem((9, 1), 0.5)).unwrap();
        let coords = build_coordinates(3, 3);
        let got = knn_per_scale(4, &cube, &cube, &coords, 3, 3, CandidateMode::Exact).unwrap();
        assert_eq!(got, vec![(0, 0.0), (1, 0.0), (2, 0.0)]);
        let got = knn_per_scale(0, &cube, &cube, &coords, 2, 3, CandidateMode::Exact).unwrap();
        assert_eq!(got, vec![(1, 0.0), (2, 0.0)]);
    }

    #[test]
    fn too_few_candidates() {
        let cube = line(&[0.0, 1.0]);
        let coords = build_coordinates(1, 2);
        assert!(matches!(
            knn_per_scale(0, &cube, &cube, &coords, 2, 3, CandidateMode::Exact),
            Err(Error::InfeasibleK { available: 1, .. })
        ));
    }

    #[test]
    fn wide_window_equals_exact() {
        let vals: Vec<f64> = (0..20).map(|i| ((i * 7) % 11) as f64 / 10.0).collect();
        let values = Array2::from_shape_vec((10, 2), vals).unwrap();
        let cube = HsiCube::new(2, 5, values).unwrap();
        let coords = build_coordinates(2, 5);
        let stack = multiscale_wmf(&cube, &[3], 0.2).unwrap();
        for i in 0..10 {
            let exact =
                knn_per_scale(i, &cube, &stack.cubes[0], &coords, 4, 3, CandidateMode::Exact).unwrap();
            let pruned =
                knn_per_scale(i, &cube, &stack.cubes[0], &coords, 4, 3, CandidateMode::Window(9)).unwrap();
            assert_eq!(exact, pruned);
        }
    }

    #[test]
    fn pooling_merges_in_order() {
        let a = vec![(3, 0.1), (5, 0.3)];
        let b = vec![(7, 0.2), (9, 0.4)];
        assert_eq!(pool_scales(&[a, b], 2).unwrap(), vec![(3, 0.1), (7, 0.2)]);
    }

    #[test]
    fn pooling_keeps_minimum_duplicate() {
        let a = vec![(4, 0.5), (1, 0.6)];
        let b = vec![(4, 0.2), (2, 0.7)];
        assert_eq!(
            pool_scales(&[a, b], 3).unwrap(),
            vec![(4, 0.2), (1, 0.6), (2, 0.7)]
        );
    }

    #[test]
    fn pooling_single_scale_is_identity() {
        let a = vec![(2, 0.1), (0, 0.1), (8, 0.9)];
        let sorted = vec![(0, 0.1), (2, 0.1), (8, 0.9)];
        assert_eq!(pool_scales(&[a], 3).unwrap(), sorted);
        assert!(pool_scales(&[vec![(1, 0.0)]], 2).is_err());
    }

    #[test]
    fn summary_mean_matches_neighbors() {
        let vals: Vec<f64> = (0..32).map(|i| ((i * 13) % 17) as f64 / 16.0).collect();
        let values = Array2::from_shape_vec((16, 2), vals).unwrap();
        let cube = HsiCube::new(4, 4, values).unwrap();
        let coords = build_coordinates(4, 4);
        let stack = multiscale_wmf(&cube, &[3, 5], 0.2).unwrap();
        let summary = find_neighbors(&cube, &stack, &coords, 3, CandidateMode::Exact).unwrap();
        for i in 0..16 {
            let ids = summary.neighbors(i);
            assert!(!ids.contains(&i));
            let mut uniq = ids.to_vec();
            uniq.sort_unstable();
            uniq.dedup();
            assert_eq!(uniq.len(), 3);
            assert!(summary.distances(i).windows(2).all(|w| w[0] <= w[1]));
            for b in 0..2 {
                let mean: f64 = ids.iter().map(|&j| cube.pixel(j)[b]).sum::<f64>() / 3.0;
                assert!((mean - summary.neighbor_mean()[[i, b]]).abs() < 1e-12);
            }
        }
    }
}
