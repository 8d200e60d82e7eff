//! Clustering accuracy against ground truth.
//!
//! Cluster ids are arbitrary, so predicted clusters are first matched
//! one-to-one to ground-truth classes by a maximum-weight assignment on the
//! confusion counts. Clusters left without a class count as errors. Only
//! labeled pixels (ground truth != 0) are scored.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Counts with ground-truth classes as rows and predicted (or aligned)
/// labels as columns. Diagonal cells are the agreements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_rows(counts: Vec<Vec<u64>>) -> Self {
        let width = counts.first().map_or(0, Vec::len);
        assert!(
            counts.iter().all(|r| r.len() == width),
            "confusion rows must have equal length"
        );
        Self { counts }
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.counts[r][c]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn trace(&self) -> u64 {
        (0..self.rows().min(self.cols())).map(|i| self.counts[i][i]).sum()
    }

    fn row_sum(&self, r: usize) -> u64 {
        self.counts[r].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

/// Fraction of scored pixels on the diagonal.
pub fn overall_accuracy(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    if total == 0 {
        return 0.0;
    }
    cm.trace() as f64 / total as f64
}

/// Mean per-class recall over classes that have pixels.
pub fn average_accuracy(cm: &ConfusionMatrix) -> f64 {
    let recalls: Vec<f64> = (0..cm.rows())
        .filter_map(|r| {
            let sum = cm.row_sum(r);
            (sum > 0).then(|| {
                let hit = if r < cm.cols() { cm.get(r, r) } else { 0 };
                hit as f64 / sum as f64
            })
        })
        .collect();
    if recalls.is_empty() {
        return 0.0;
    }
    recalls.iter().sum::<f64>() / recalls.len() as f64
}

/// Cohen's kappa. Negative values are returned as is.
pub fn kappa(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let p_o = overall_accuracy(cm);
    let p_e: f64 = (0..cm.rows().min(cm.cols()))
        .map(|r| cm.row_sum(r) as f64 * cm.col_sum(r) as f64)
        .sum::<f64>()
        / (n * n);
    if 1.0 - p_e <= f64::EPSILON {
        return if p_o == 1.0 { 1.0 } else { 0.0 };
    }
    (p_o - p_e) / (1.0 - p_e)
}

/// Predicted-label to class assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    /// Class (1-based) matched to each predicted label, `None` if unmatched.
    pub mapping: BTreeMap<u32, Option<u32>>,
    pub classes: u32,
}

impl Alignment {
    pub fn class_of(&self, pred: u32) -> Option<u32> {
        self.mapping.get(&pred).copied().flatten()
    }

    /// Confusion matrix with columns `0..classes` for the aligned classes and
    /// one extra column for unmatched clusters.
    pub fn confusion(&self, pred: &[u32], gt: &[u32]) -> ConfusionMatrix {
        let c = self.classes as usize;
        let mut counts = vec![vec![0u64; c + 1]; c];
        for (&p, &g) in pred.iter().zip(gt) {
            if g == 0 {
                continue;
            }
            let col = self.class_of(p).map_or(c, |cls| cls as usize - 1);
            counts[g as usize - 1][col] += 1;
        }
        ConfusionMatrix::from_rows(counts)
    }
}

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// row and column potentials). Returns the column assigned to every row.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    assert!(cost.iter().all(|r| r.len() == n), "cost matrix must be square");
    // 1-based; column 0 is a virtual start
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[owner[j] - 1] = j - 1;
    }
    assignment
}

/// Optimal one-to-one matching of predicted labels to ground-truth classes.
pub fn align_labels(pred: &[u32], gt: &[u32]) -> Result<Alignment> {
    if pred.len() != gt.len() {
        return Err(Error::InvalidData(format!(
            "{} predicted labels for {} ground-truth pixels",
            pred.len(),
            gt.len()
        )));
    }
    let classes = gt.iter().copied().max().unwrap_or(0);
    let mut pred_ids: Vec<u32> = pred.to_vec();
    pred_ids.sort_unstable();
    pred_ids.dedup();
    let column: BTreeMap<u32, usize> = pred_ids.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    let size = pred_ids.len().max(classes as usize);
    let mut counts = vec![vec![0i64; size]; size];
    for (&p, &g) in pred.iter().zip(gt) {
        if g > 0 {
            counts[column[&p]][g as usize - 1] += 1;
        }
    }
    let most = counts.iter().flatten().copied().max().unwrap_or(0);
    let cost: Vec<Vec<i64>> = counts
        .iter()
        .map(|r| r.iter().map(|&c| most - c).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    let mapping = pred_ids
        .iter()
        .enumerate()
        .map(|(row, &p)| {
            let class = assignment[row];
            (p, (class < classes as usize).then_some(class as u32 + 1))
        })
        .collect();
    Ok(Alignment { mapping, classes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub overall_accuracy: f64,
    pub average_accuracy: f64,
    pub kappa: f64,
    pub alignment: Alignment,
    pub confusion: ConfusionMatrix,
}

/// Aligns `pred` to `gt` and scores it.
pub fn evaluate(pred: &[u32], gt: &[u32]) -> Result<Evaluation> {
    let alignment = align_labels(pred, gt)?;
    let confusion = alignment.confusion(pred, gt);
    if confusion.total() == 0 {
        return Err(Error::InvalidData("ground truth has no labeled pixels".into()));
    }
    Ok(Evaluation {
        overall_accuracy: overall_accuracy(&confusion),
        average_accuracy: average_accuracy(&confusion),
        kappa: kappa(&confusion),
        alignment,
        confusion,
    })
}
