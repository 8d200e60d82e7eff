//! Synthetic block scenes for desk-scale experiments.
//!
//! Every class owns a contiguous rectangle of the grid. Class `j` shares a
//! gently sloped base spectrum and adds `separation` on the bands
//! `b` with `b % classes == j`, so any two class means differ by
//! `separation` on a disjoint set of bands. Pixels receive i.i.d. Gaussian
//! noise. Values are rounded to `f32` so a scene survives a trip through the
//! cube file format unchanged.

use ndarray::Array2;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cube::{GroundTruth, HsiCube};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub classes: usize,
    /// Offset added to each class's signature bands.
    pub separation: f64,
    /// Standard deviation of the additive per-band noise.
    pub noise: f64,
    /// Share of pixels marked as unlabeled background in the ground truth.
    pub background_fraction: f64,
}

impl SceneSpec {
    /// Square-ish block layout with no background and mild noise.
    pub fn blocks(height: usize, width: usize, bands: usize, classes: usize) -> Self {
        Self {
            height,
            width,
            bands,
            classes,
            separation: 0.5,
            noise: 0.05,
            background_fraction: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.height * self.width;
        if n == 0 || self.bands == 0 {
            return Err(Error::InfeasibleSpec("empty grid or no bands".into()));
        }
        if self.classes == 0 || self.classes > n {
            return Err(Error::InfeasibleSpec(format!(
                "{} classes cannot fit in {n} pixels",
                self.classes
            )));
        }
        if self.classes > self.bands {
            return Err(Error::InfeasibleSpec(format!(
                "{} classes need at least as many bands, got {}",
                self.classes, self.bands
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::InfeasibleSpec(format!("noise level {}", self.noise)));
        }
        if !self.separation.is_finite() {
            return Err(Error::InfeasibleSpec("separation must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.background_fraction) {
            return Err(Error::InfeasibleSpec(format!(
                "background fraction {} outside [0, 1)",
                self.background_fraction
            )));
        }
        Ok(())
    }

    /// Noise-free spectrum of class `class` (0-based).
    pub fn class_spectrum(&self, class: usize) -> Vec<f64> {
        (0..self.bands)
            .map(|b| {
                let base = 0.25 + 0.1 * b as f64 / self.bands as f64;
                if b % self.classes == class {
                    base + self.separation
                } else {
                    base
                }
            })
            .collect()
    }

    /// 0-based class of every pixel under the block layout.
    pub fn layout(&self) -> Vec<usize> {
        let (h, w, c) = (self.height, self.width, self.classes);
        let n = h * w;
        let block_rows = (c as f64).sqrt().floor().max(1.0) as usize;
        let block_cols = c.div_ceil(block_rows);
        if h < block_rows || w < block_cols {
            return (0..n).map(|i| i * c / n).collect();
        }
        (0..n)
            .map(|i| {
                let br = (i / w) * block_rows / h;
                let bc = (i % w) * block_cols / w;
                (br * block_cols + bc).min(c - 1)
            })
            .collect()
    }
}

/// Builds the cube and its ground truth. Pure in `(spec, seed)`.
pub fn synth_scene(spec: &SceneSpec, seed: u64) -> Result<(HsiCube, GroundTruth)> {
    spec.validate()?;
    let n = spec.height * spec.width;
    let d = spec.bands;
    let layout = spec.layout();
    let spectra: Vec<Vec<f64>> = (0..spec.classes).map(|c| spec.class_spectrum(c)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut values = Array2::zeros((n, d));
    for (i, &class) in layout.iter().enumerate() {
        for b in 0..d {
            let mut v = spectra[class][b];
            if spec.noise > 0.0 {
                v += spec.noise * normal.sample(&mut rng);
            }
            values[[i, b]] = v as f32 as f64;
        }
    }

    let mut labels: Vec<u32> = layout.iter().map(|&c| c as u32 + 1).collect();
    let n_background = (spec.background_fraction * n as f64).round() as usize;
    if n_background > 0 {
        for i in index::sample(&mut rng, n, n_background) {
            labels[i] = 0;
        }
        // keep at least one labeled pixel per class
        for class in 0..spec.classes {
            let label = class as u32 + 1;
            if !labels.contains(&label) {
                let first = layout.iter().position(|&c| c == class).expect("class in layout");
                labels[first] = label;
            }
        }
    }

    let cube = HsiCube::new(spec.height, spec.width, values)?;
    let gt = GroundTruth::new(spec.height, spec.width, labels)?;
    Ok((cube, gt))
}
