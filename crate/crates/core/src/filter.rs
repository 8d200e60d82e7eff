//! Weighted mean filtering over square spatial windows.
//!
//! Each pixel is replaced by a mean of itself and its window neighbors,
//! weighting neighbor `x_k` by `exp(-gamma0 * |x - x_k|^2)`. Windows are
//! clipped at the image border.

use ndarray::Array2;
use rayon::prelude::*;

use crate::cube::HsiCube;
use crate::error::{Error, Result};

pub const DEFAULT_GAMMA0: f64 = 0.2;
pub const DEFAULT_SCALES: [usize; 4] = [3, 7, 11, 15];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub window: usize,
    pub gamma0: f64,
}

impl FilterParams {
    pub fn new(window: usize, gamma0: f64) -> Result<Self> {
        check_window(window)?;
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma0 must be positive, got {gamma0}"
            )));
        }
        Ok(Self { window, gamma0 })
    }

    /// Half width `t = (w - 1) / 2`.
    pub fn radius(&self) -> usize {
        (self.window - 1) / 2
    }
}

fn check_window(window: usize) -> Result<()> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "window size must be odd and at least 3, got {window}"
        )));
    }
    Ok(())
}

/// Inclusive row and column ranges of the clipped window around pixel `i`.
pub(crate) fn window_bounds(
    i: usize,
    radius: usize,
    height: usize,
    width: usize,
) -> ((usize, usize), (usize, usize)) {
    let (r, c) = (i / width, i % width);
    (
        (r.saturating_sub(radius), (r + radius).min(height - 1)),
        (c.saturating_sub(radius), (c + radius).min(width - 1)),
    )
}

/// Pixels other than `i` inside the clipped `w x w` window, row-major.
///
/// Any odd `w` is accepted here, including `w = 1` (empty window).
pub fn window_neighbors(i: usize, window: usize, height: usize, width: usize) -> Vec<usize> {
    debug_assert!(window % 2 == 1, "window must be odd");
    let ((r0, r1), (c0, c1)) = window_bounds(i, window / 2, height, width);
    let mut out = Vec::with_capacity((r1 - r0 + 1) * (c1 - c0 + 1));
    for r in r0..=r1 {
        for c in c0..=c1 {
            let j = r * width + c;
            if j != i {
                out.push(j);
            }
        }
    }
    out
}

/// Single-scale weighted mean filter.
pub fn wmf(cube: &HsiCube, params: FilterParams) -> HsiCube {
    let (h, w, d) = (cube.height(), cube.width(), cube.bands());
    let src = cube.as_slice();
    let radius = params.radius();
    let mut out = Array2::<f64>::zeros((h * w, d));

    out.as_slice_mut()
        .expect("standard layout")
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, row)| {
            let xi = &src[i * d..(i + 1) * d];
            let mut acc = xi.to_vec();
            let mut total = 1.0;
            let ((r0, r1), (c0, c1)) = window_bounds(i, radius, h, w);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    let j = r * w + c;
                    if j == i {
                        continue;
                    }
                    let xj = &src[j * d..(j + 1) * d];
                    let dist2: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum();
                    let v = (-params.gamma0 * dist2).exp();
                    total += v;
                    for (a, b) in acc.iter_mut().zip(xj) {
                        *a += v * b;
                    }
                }
            }
            for (o, a) in row.iter_mut().zip(&acc) {
                *o = a / total;
            }
        });
    cube.with_values(out)
}

/// One filtered cube per window size, each computed from the input cube.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredStack {
    pub scales: Vec<usize>,
    pub cubes: Vec<HsiCube>,
}

impl FilteredStack {
    pub fn iter(&self) -> impl Iterator<Item = (usize, &HsiCube)> {
        self.scales.iter().copied().zip(&self.cubes)
    }
}

pub fn multiscale_wmf(cube: &HsiCube, scales: &[usize], gamma0: f64) -> Result<FilteredStack> {
    if scales.is_empty() {
        return Err(Error::InvalidParameter("no filter scales given".into()));
    }
    let params = scales
        .iter()
        .map(|&s| FilterParams::new(s, gamma0))
        .collect::<Result<Vec<_>>>()?;
    let cubes = params.into_iter().map(|p| wmf(cube, p)).collect();
    Ok(FilteredStack {
        scales: scales.to_vec(),
        cubes,
    })
}
