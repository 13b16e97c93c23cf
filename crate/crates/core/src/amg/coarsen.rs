//! Strength-of-connection graph, coarse/fine splitting, and direct
//! interpolation for the classical coarsening pipeline.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, Symmetry};

/// Per-row sets of strongly influencing columns.
///
/// Column j strongly influences row i when i ≠ j and
/// `-a_ij ≥ theta · max_{k≠i}(-a_ik)`; rows without negative off-diagonals
/// have empty strong sets.
#[derive(Debug, Clone)]
pub struct StrengthGraph {
    theta: f64,
    rows: Vec<Vec<usize>>,
}

impl StrengthGraph {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Sorted strong influencers of row `i`.
    pub fn strong(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }
}

/// Builds the strength graph with threshold `theta` in (0, 1).
pub fn strength(a: &SparseMatrix, theta: f64) -> Result<StrengthGraph> {
    if !(0.0..1.0).contains(&theta) || theta == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "strength threshold {theta} outside (0, 1)"
        )));
    }
    if !a.is_square() {
        return Err(Error::InvalidStructure(
            "strength graph requires a square matrix".into(),
        ));
    }
    let n = a.n_rows();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let max_neg = cols
            .iter()
            .zip(vals)
            .filter(|&(&j, _)| j != i)
            .fold(0.0f64, |m, (_, &v)| m.max(-v));
        let mut strong = Vec::new();
        if max_neg > 0.0 {
            let cut = theta * max_neg;
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && -v >= cut {
                    strong.push(j);
                }
            }
        }
        rows.push(strong);
    }
    Ok(StrengthGraph { theta, rows })
}

/// Coarse/fine label of one unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CfLabel {
    Coarse,
    Fine,
}

/// A coarse/fine partition with the coarse reindexing.
#[derive(Debug, Clone)]
pub struct CfSplitting {
    labels: Vec<CfLabel>,
    /// Coarse index of each coarse point, by ascending original index.
    coarse_index: Vec<Option<usize>>,
    n_coarse: usize,
}

impl CfSplitting {
    pub fn labels(&self) -> &[CfLabel] {
        &self.labels
    }

    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    pub fn coarse_index(&self, i: usize) -> Option<usize> {
        self.coarse_index[i]
    }
}

/// Greedy first-pass splitting by the measure "how many points each point
/// strongly influences", plus a repair pass that promotes any fine point
/// whose nonempty strong set contains no coarse point.
///
/// Deterministic: measure ties break toward the lowest index.
pub fn split(g: &StrengthGraph) -> CfSplitting {
    let n = g.n();
    // influencees[j] = rows that j strongly influences.
    let mut influencees: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in g.strong(i) {
            influencees[j].push(i);
        }
    }
    let mut measure: Vec<usize> = influencees.iter().map(Vec::len).collect();
    let mut labels: Vec<Option<CfLabel>> = vec![None; n];
    // Max-heap keyed by (measure, lowest index wins ties); stale entries are
    // skipped when their recorded measure no longer matches.
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = (0..n)
        .filter(|&i| measure[i] > 0)
        .map(|i| (measure[i], Reverse(i)))
        .collect();
    while let Some((m, Reverse(i))) = heap.pop() {
        if labels[i].is_some() || measure[i] != m {
            continue;
        }
        labels[i] = Some(CfLabel::Coarse);
        for &dep in &influencees[i] {
            if labels[dep].is_some() {
                continue;
            }
            labels[dep] = Some(CfLabel::Fine);
            // A new fine point makes its other influencers better coarse
            // candidates.
            for &k in g.strong(dep) {
                if labels[k].is_none() {
                    measure[k] += 1;
                    heap.push((measure[k], Reverse(k)));
                }
            }
        }
    }
    let mut labels: Vec<CfLabel> = labels
        .into_iter()
        .map(|l| l.unwrap_or(CfLabel::Fine))
        .collect();
    // Repair: a fine point with strong influencers but none of them coarse
    // cannot interpolate; promote it.
    for i in 0..n {
        if labels[i] == CfLabel::Fine
            && !g.strong(i).is_empty()
            && !g.strong(i).iter().any(|&j| labels[j] == CfLabel::Coarse)
        {
            labels[i] = CfLabel::Coarse;
        }
    }
    let mut coarse_index = vec![None; n];
    let mut n_coarse = 0;
    for i in 0..n {
        if labels[i] == CfLabel::Coarse {
            coarse_index[i] = Some(n_coarse);
            n_coarse += 1;
        }
    }
    CfSplitting {
        labels,
        coarse_index,
        n_coarse,
    }
}

/// Direct interpolation: coarse rows inject, fine rows distribute over their
/// strong coarse neighbors as
/// `w_ij = -(a_ij / a_ii) · (Σ_{k∈N_i, a_ik<0} a_ik) / (Σ_{k∈C_i} a_ik)`.
///
/// Fine points with an empty strong set get an empty row (no coarse
/// correction; the smoother owns them). A fine point whose nonempty strong
/// set contains no coarse neighbor is a setup error; the splitting repair
/// pass prevents it.
pub fn interpolation(
    a: &SparseMatrix,
    g: &StrengthGraph,
    split: &CfSplitting,
) -> Result<SparseMatrix> {
    let n = a.n_rows();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        match split.labels()[i] {
            CfLabel::Coarse => {
                triplets.push((i, split.coarse_index(i).unwrap(), 1.0));
            }
            CfLabel::Fine => {
                if g.strong(i).is_empty() {
                    continue;
                }
                let coarse_nbrs: Vec<usize> = g
                    .strong(i)
                    .iter()
                    .copied()
                    .filter(|&j| split.labels()[j] == CfLabel::Coarse)
                    .collect();
                if coarse_nbrs.is_empty() {
                    return Err(Error::AmgSetup(format!(
                        "fine point {i} has strong neighbors but no coarse one"
                    )));
                }
                let (cols, vals) = a.row(i);
                let mut diag = 0.0;
                let mut neg_sum = 0.0;
                for (&j, &v) in cols.iter().zip(vals) {
                    if j == i {
                        diag = v;
                    } else if v < 0.0 {
                        neg_sum += v;
                    }
                }
                let coarse_sum: f64 = coarse_nbrs.iter().map(|&j| a.get(i, j)).sum();
                for &j in &coarse_nbrs {
                    let w = -(a.get(i, j) / diag) * (neg_sum / coarse_sum);
                    triplets.push((i, split.coarse_index(j).unwrap(), w));
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, split.n_coarse(), &triplets, Symmetry::General)
}
