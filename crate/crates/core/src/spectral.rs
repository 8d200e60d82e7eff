//! Spectral embedding of an anchor graph.
//!
//! With `A = Z diag(deg)^-1/2` the normalized graph is `S = A A^T`, so the
//! leading eigenvectors of `S` are the leading left singular vectors of `A`.
//! They are recovered from the small `m' x m'` Gram matrix `G = A^T A`:
//! for each eigenpair `(lambda, v)` of `G`, `f = A v / sqrt(lambda)`.
//! Nothing of size `n x n` is ever formed.

use ndarray::Array2;

use crate::anchor::AnchorGraph;
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

/// Eigenvalues of the Gram matrix at or below this are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEmbedding {
    /// `n x c`, orthonormal columns.
    pub f: Array2<f64>,
    /// Leading singular values of `A`, descending.
    pub singular_values: Vec<f64>,
}

/// Sparse view of `A`: per row, `(active column, value)` pairs.
struct ScaledRows {
    n_cols: usize,
    k: usize,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl ScaledRows {
    fn new(graph: &AnchorGraph) -> Self {
        let active = graph.active_anchors();
        let mut column = vec![usize::MAX; graph.n_anchors()];
        for (c, &j) in active.iter().enumerate() {
            column[j] = c;
        }
        let degrees = graph.degrees();
        let k = graph.k();
        let mut cols = Vec::with_capacity(graph.n_pixels() * k);
        let mut vals = Vec::with_capacity(graph.n_pixels() * k);
        for i in 0..graph.n_pixels() {
            let (idx, w) = graph.row(i);
            for (&j, &z) in idx.iter().zip(w) {
                // zero weights may point at inactive anchors
                if z > 0.0 {
                    cols.push(column[j]);
                    vals.push(z / degrees[j].sqrt());
                } else {
                    cols.push(0);
                    vals.push(0.0);
                }
            }
        }
        Self {
            n_cols: active.len(),
            k,
            cols,
            vals,
        }
    }

    fn n_rows(&self) -> usize {
        self.cols.len() / self.k.max(1)
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = i * self.k..(i + 1) * self.k;
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `A^T A`, accumulated in pixel order.
    fn gram(&self) -> Array2<f64> {
        let mut g = Array2::zeros((self.n_cols, self.n_cols));
        for i in 0..self.n_rows() {
            for (a, va) in self.row(i) {
                if va == 0.0 {
                    continue;
                }
                for (b, vb) in self.row(i) {
                    g[[a, b]] += va * vb;
                }
            }
        }
        g
    }
}

/// Top-`c` left singular subspace of `A`.
pub fn embed(graph: &AnchorGraph, c: usize) -> Result<SpectralEmbedding> {
    let rows = ScaledRows::new(graph);
    if c == 0 || c > rows.n_cols {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension {c} must lie in 1..={} (active anchors)",
            rows.n_cols
        )));
    }
    let eig = symmetric_eigen(&rows.gram());
    let m = rows.n_cols;

    let mut singular_values = Vec::with_capacity(c);
    let mut basis = Array2::zeros((m, c));
    for r in 0..c {
        let src = m - 1 - r;
        let lambda = eig.values[src];
        if lambda <= RANK_TOLERANCE {
            return Err(Error::RankDeficient {
                index: r,
                value: lambda,
            });
        }
        let inv = lambda.sqrt().recip();
        basis
            .column_mut(r)
            .assign(&eig.vectors.column(src).mapv(|x| x * inv));
        singular_values.push(lambda.sqrt());
    }

    let n = rows.n_rows();
    let mut f = Array2::<f64>::zeros((n, c));
    for i in 0..n {
        let mut out = f.row_mut(i);
        for (a, va) in rows.row(i) {
            if va == 0.0 {
                continue;
            }
            for (o, b) in out.iter_mut().zip(basis.row(a)) {
                *o += va * b;
            }
        }
    }

    for mut col in f.columns_mut() {
        let mut pivot = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }

    Ok(SpectralEmbedding { f, singular_values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_graph() -> AnchorGraph {
        let rows = vec![
            vec![(0, 1.0)],
            vec![(0, 1.0)],
            vec![(1, 1.0)],
            vec![(1, 1.0)],
        ];
        AnchorGraph::from_rows(2, 1, 0.0, &rows).unwrap()
    }

    #[test]
    fn block_embedding() {
        let emb = embed(&block_graph(), 2).unwrap();
        for s in &emb.singular_values {
            assert!((s - 1.0).abs() < 1e-15);
        }
        let h = 0.5f64.sqrt();
        // eigenvalue 1 is double, so F is any rotation of the indicator basis
        for i in 0..4 {
            let norm: f64 = emb.f.row(i).iter().map(|x| x * x).sum();
            assert!((norm - 0.5).abs() < 1e-14);
        }
        let gram = emb.f.t().dot(&emb.f);
        assert!((gram[[0, 0]] - 1.0).abs() < 1e-14 && gram[[0, 1]].abs() < 1e-14);
        assert!((emb.f.row(0).dot(&emb.f.row(1)) - 0.5).abs() < 1e-14);
        assert!(emb.f.row(0).dot(&emb.f.row(2)).abs() < 1e-14);
        assert!(emb.f.iter().all(|x| x.abs() <= h + 1e-14));
    }

    #[test]
    fn too_many_dimensions() {
        assert!(matches!(
            embed(&block_graph(), 3),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn rank_deficiency_is_reported() {
        // two pixels share both anchors identically: A has rank 1
        let rows = vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]];
        let g = AnchorGraph::from_rows(2, 2, 0.0, &rows).unwrap();
        match embed(&g, 2) {
            Err(Error::RankDeficient { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }
}
