//! Outlier scores from the column energy of `C*`, ROC curves and AUC.

use std::io::Write;

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};
use crate::linalg::{self, ColumnSupport};

/// Default relative threshold: column `i` is an outlier when
/// `‖C*ᵢ‖ ≥ DEFAULT_DELTA_REL·‖Xᵢ‖`.
pub const DEFAULT_DELTA_REL: f64 = 1e-4;

/// `‖C*ᵢ‖₂` for every column.
pub fn score_columns(c: MatRef<'_, f64>) -> Vec<f64> {
    linalg::column_norms(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false-positive rate, true-positive rate)` from `(0,0)` to `(1,1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC over every distinct threshold, highest score first; equal scores
/// enter as a single step. Area by the trapezoid rule.
pub fn roc_auc(scores: &[f64], truth: &ColumnSupport) -> Result<RocCurve> {
    if truth.universe() != scores.len() {
        return Err(LrrError::mismatch("roc_auc", scores.len(), truth.universe()));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(LrrError::InvalidInput(format!("score {i} is not finite")));
    }
    let positives = truth.len();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(LrrError::UndefinedAuc);
    }
    let mask = truth.mask();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if mask[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// Flags columns with `score ≥ delta_rel·‖Xᵢ‖`; zero data columns are never
/// flagged.
pub fn classify(scores: &[f64], x: MatRef<'_, f64>, delta_rel: f64) -> Result<ColumnSupport> {
    if scores.len() != x.ncols() {
        return Err(LrrError::mismatch("classify", x.ncols(), scores.len()));
    }
    let norms = linalg::column_norms(x);
    let mask: Vec<bool> = scores
        .iter()
        .zip(&norms)
        .map(|(&s, &n)| n > 0.0 && s >= delta_rel * n)
        .collect();
    Ok(ColumnSupport::from_mask(&mask))
}

/// Two-column CSV with header `fpr,tpr`.
pub fn write_roc_csv<W: Write>(roc: &RocCurve, mut out: W) -> Result<()> {
    writeln!(out, "fpr,tpr")?;
    for (f, t) in &roc.points {
        writeln!(out, "{f:?},{t:?}")?;
    }
    Ok(())
}
