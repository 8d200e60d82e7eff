//! Lloyd's k-means with k-means++ seeding and independent restarts.

use std::collections::HashSet;

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansRun {
    /// 0-based cluster of every row.
    pub labels: Vec<usize>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub best: KMeansRun,
    pub best_restart: usize,
    /// Final inertia of every restart, in restart order.
    pub inertias: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn count_distinct_rows(data: &[f64], d: usize, stop_at: usize) -> usize {
    let mut seen = HashSet::new();
    for row in data.chunks_exact(d) {
        let key: Vec<u64> = row.iter().map(|v| (v + 0.0).to_bits()).collect();
        seen.insert(key);
        if seen.len() >= stop_at {
            break;
        }
    }
    seen.len()
}

/// Best of `restarts` runs by inertia, ties to the earlier restart.
pub fn kmeans(data: ArrayView2<'_, f64>, c: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if c < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 clusters, got {c}")));
    }
    if restarts == 0 {
        return Err(Error::InvalidParameter("need at least one restart".into()));
    }
    let data = data.as_standard_layout();
    let d = data.ncols();
    let slice = data.as_slice().expect("standard layout");
    if d == 0 || count_distinct_rows(slice, d, c) < c {
        return Err(Error::DegenerateInput(format!(
            "fewer than {c} distinct points to cluster"
        )));
    }
    let runs: Vec<KMeansRun> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            lloyd(slice, d, c, &mut rng)
        })
        .collect();
    let inertias: Vec<f64> = runs.iter().map(|r| r.inertia).collect();
    let best_restart = (0..restarts)
        .min_by(|&a, &b| inertias[a].total_cmp(&inertias[b]).then(a.cmp(&b)))
        .expect("at least one restart");
    let best = runs.into_iter().nth(best_restart).expect("restart exists");
    Ok(KMeansResult {
        best,
        best_restart,
        inertias,
    })
}

fn plus_plus(data: &[f64], d: usize, c: usize, rng: &mut impl Rng) -> Vec<f64> {
    let n = data.len() / d;
    let mut centroids = Vec::with_capacity(c * d);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(&data[first * d..(first + 1) * d]);
    let mut closest: Vec<f64> = data
        .chunks_exact(d)
        .map(|x| sq_dist(x, &centroids[..d]))
        .collect();
    for _ in 1..c {
        let total: f64 = closest.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in closest.iter().enumerate() {
            acc += w;
            if acc > target {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave the target just past the final sum
        let pick = pick.unwrap_or_else(|| {
            closest
                .iter()
                .rposition(|&w| w > 0.0)
                .expect("distinct points remain")
        });
        let center = &data[pick * d..(pick + 1) * d];
        centroids.extend_from_slice(center);
        for (cl, x) in closest.iter_mut().zip(data.chunks_exact(d)) {
            *cl = cl.min(sq_dist(x, center));
        }
    }
    centroids
}

fn nearest(x: &[f64], centroids: &[f64], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, cen) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_dist(x, cen);
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best
}

fn lloyd(data: &[f64], d: usize, c: usize, rng: &mut impl Rng) -> KMeansRun {
    let n = data.len() / d;
    let mut centroids = plus_plus(data, d, c, rng);
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    let mut iterations = 0;

    loop {
        let mut changed = false;
        for (i, x) in data.chunks_exact(d).enumerate() {
            let (j, dist) = nearest(x, &centroids, d);
            if labels[i] != j {
                labels[i] = j;
                changed = true;
            }
            dists[i] = dist;
        }
        if !changed || iterations == MAX_ITERATIONS {
            break;
        }
        iterations += 1;

        let mut sums = vec![0.0; c * d];
        let mut counts = vec![0usize; c];
        for (x, &l) in data.chunks_exact(d).zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x) {
                *s += v;
            }
        }
        for j in 0..c {
            if counts[j] == 0 {
                // move the empty cluster onto the worst-fit point
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("more points than clusters");
                let old = labels[far];
                counts[old] -= 1;
                for (s, v) in sums[old * d..(old + 1) * d].iter_mut().zip(&data[far * d..(far + 1) * d]) {
                    *s -= v;
                }
                labels[far] = j;
                dists[far] = 0.0;
                counts[j] = 1;
                sums[j * d..(j + 1) * d].copy_from_slice(&data[far * d..(far + 1) * d]);
            }
        }
        for j in 0..c {
            let inv = 1.0 / counts[j] as f64;
            for (cen, s) in centroids[j * d..(j + 1) * d].iter_mut().zip(&sums[j * d..(j + 1) * d]) {
                *cen = s * inv;
            }
        }
    }

    let inertia = data
        .chunks_exact(d)
        .zip(&labels)
        .map(|(x, &l)| sq_dist(x, &centroids[l * d..(l + 1) * d]))
        .sum();
    KMeansRun {
        labels,
        centroids: Array2::from_shape_vec((c, d), centroids).expect("c x d"),
        inertia,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_groups() -> Array2<f64> {
        array![
            [0.0, 0.0],
            [0.1, 0.0],
            [0.0, 0.1],
            [5.0, 5.0],
            [5.1, 5.0],
            [5.0, 5.1]
        ]
    }

    #[test]
    fn separable_groups() {
        for seed in 0..20 {
            let res = kmeans(two_groups().view(), 2, seed, 1).unwrap();
            let l = &res.best.labels;
            assert_eq!(l[0], l[1]);
            assert_eq!(l[1], l[2]);
            assert_eq!(l[3], l[4]);
            assert_eq!(l[4], l[5]);
            assert_ne!(l[0], l[3]);
        }
    }

    #[test]
    fn deterministic() {
        let data = Array2::from_shape_fn((50, 3), |(i, j)| ((i * 31 + j * 17) % 23) as f64);
        let a = kmeans(data.view(), 4, 7, 5).unwrap();
        let b = kmeans(data.view(), 4, 7, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn best_restart_minimizes_inertia() {
        let data = Array2::from_shape_fn((80, 2), |(i, j)| ((i * 37 + j * 11) % 29) as f64);
        let res = kmeans(data.view(), 5, 3, 8).unwrap();
        assert_eq!(res.inertias.len(), 8);
        assert!(res.inertias.iter().all(|&x| res.best.inertia <= x));
        assert_eq!(res.best.inertia, res.inertias[res.best_restart]);
    }

    #[test]
    fn too_few_distinct_points() {
        let data = array![[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        assert!(matches!(
            kmeans(data.view(), 3, 0, 1),
            Err(Error::DegenerateInput(_))
        ));
        assert!(kmeans(data.view(), 2, 0, 1).is_ok());
        assert!(kmeans(data.view(), 1, 0, 1).is_err());
        assert!(kmeans(data.view(), 2, 0, 0).is_err());
    }
}
