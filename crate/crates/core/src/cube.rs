//! Hyperspectral cube, pixel coordinates and ground truth.
//!
//! Pixels are stored row-major: pixel `i` sits at row `i / width`, column
//! `i % width`, and its spectrum is row `i` of the `n x d` value matrix.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};

/// An `H x W` grid of `d`-band spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    height: usize,
    width: usize,
    values: Array2<f64>,
}

impl HsiCube {
    /// Wraps an `(H*W) x d` matrix. Every value must be finite.
    pub fn new(height: usize, width: usize, values: Array2<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidData(format!(
                "cube dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.nrows() != height * width {
            return Err(Error::InvalidData(format!(
                "{} pixel rows for a {height}x{width} cube",
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::InvalidData("cube has no bands".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let d = values.ncols();
            return Err(Error::InvalidData(format!(
                "non-finite value at pixel {} band {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            height,
            width,
            values: values.as_standard_layout().into_owned(),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_pixels(&self) -> usize {
        self.values.nrows()
    }

    pub fn pixel(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    /// Contiguous slice of every value, pixel-major and band-contiguous.
    pub fn as_slice(&self) -> &[f64] {
        self.values
            .as_slice()
            .expect("cube values are kept in standard layout")
    }

    pub(crate) fn with_values(&self, values: Array2<f64>) -> Self {
        debug_assert_eq!(values.dim(), self.values.dim());
        Self {
            height: self.height,
            width: self.width,
            values: values.as_standard_layout().into_owned(),
        }
    }
}

/// Per-band min-max scaling into `[0, 1]`. A constant band becomes all zeros.
pub fn normalize_cube(cube: &HsiCube) -> Result<HsiCube> {
    if let Some(pos) = cube.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite value at index {pos}")));
    }
    let mut values = cube.values.clone();
    for mut band in values.axis_iter_mut(Axis(1)) {
        let (lo, hi) = band
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        if range > 0.0 {
            band.mapv_inplace(|v| ((v - lo) / range).clamp(0.0, 1.0));
        } else {
            band.fill(0.0);
        }
    }
    Ok(cube.with_values(values))
}

/// Spatial coordinates of every pixel, stored as a `2 x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMatrix {
    coords: Array2<f64>,
}

impl CoordinateMatrix {
    /// Integer grid positions `(row, col)` without normalization.
    pub fn grid(height: usize, width: usize) -> Self {
        let n = height * width;
        let mut coords = Array2::zeros((2, n));
        for i in 0..n {
            coords[[0, i]] = (i / width) as f64;
            coords[[1, i]] = (i % width) as f64;
        }
        Self { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.ncols() == 0
    }

    pub fn get(&self, i: usize) -> [f64; 2] {
        [self.coords[[0, i]], self.coords[[1, i]]]
    }

    pub fn as_matrix(&self) -> ArrayView2<'_, f64> {
        self.coords.view()
    }
}

/// Normalized coordinates: rows divided by `max(H-1, 1)`, columns by `max(W-1, 1)`.
pub fn build_coordinates(height: usize, width: usize) -> CoordinateMatrix {
    let mut grid = CoordinateMatrix::grid(height, width);
    let row_scale = height.saturating_sub(1).max(1) as f64;
    let col_scale = width.saturating_sub(1).max(1) as f64;
    grid.coords.row_mut(0).mapv_inplace(|r| r / row_scale);
    grid.coords.row_mut(1).mapv_inplace(|c| c / col_scale);
    grid
}

/// Reference labels: 0 marks unlabeled background, `1..=classes` are classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    classes: u32,
}

impl GroundTruth {
    /// The class count is the largest label; every class up to it must occur.
    pub fn new(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != height * width {
            return Err(Error::InvalidData(format!(
                "{} labels for a {height}x{width} grid",
                labels.len()
            )));
        }
        let classes = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; classes as usize + 1];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = (1..=classes as usize).find(|&c| !seen[c]) {
            return Err(Error::InvalidData(format!(
                "class {missing} has no pixels (largest label is {classes})"
            )));
        }
        Ok(Self {
            height,
            width,
            labels,
            classes,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    /// `true` for pixels that carry a class label.
    pub fn mask(&self) -> Vec<bool> {
        self.labels.iter().map(|&l| l != 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn column(vals: &[f64]) -> HsiCube {
        let values = Array2::from_shape_vec((vals.len(), 1), vals.to_vec()).unwrap();
        HsiCube::new(1, vals.len(), values).unwrap()
    }

    #[test]
    fn min_max_band() {
        let out = normalize_cube(&column(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_band_maps_to_zero() {
        let out = normalize_cube(&column(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn full_range_band_is_fixed_point() {
        let out = normalize_cube(&column(&[0.0, 1.0])).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn rejects_non_finite() {
        let values = array![[1.0], [f64::NAN]];
        assert!(matches!(
            HsiCube::new(1, 2, values),
            Err(Error::InvalidData(_))
        ));
    }

    #[test]
    fn coordinates_two_by_two() {
        let c = build_coordinates(2, 2);
        let cols: Vec<_> = (0..4).map(|i| c.get(i)).collect();
        assert_eq!(cols, vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
    }

    #[test]
    fn coordinates_single_row_and_column() {
        let row = build_coordinates(1, 3);
        assert_eq!(row.as_matrix(), array![[0.0, 0.0, 0.0], [0.0, 0.5, 1.0]]);
        let col = build_coordinates(3, 1);
        assert_eq!(col.as_matrix(), array![[0.0, 0.5, 1.0], [0.0, 0.0, 0.0]]);
    }

    #[test]
    fn grid_is_row_major() {
        let g = CoordinateMatrix::grid(3, 4);
        for i in 0..12 {
            assert_eq!(g.get(i), [(i / 4) as f64, (i % 4) as f64]);
        }
    }

    #[test]
    fn ground_truth_requires_every_class() {
        assert!(GroundTruth::new(1, 3, vec![0, 1, 2]).is_ok());
        assert!(GroundTruth::new(1, 3, vec![0, 1, 3]).is_err());
        assert!(GroundTruth::new(1, 2, vec![0, 1, 2]).is_err());
    }
}
