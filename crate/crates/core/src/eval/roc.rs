use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ROC points sorted by FPR, with the sweep value behind each point
/// (`None` for the appended `(0,0)` and `(1,1)` endpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub tau_values: Vec<Option<f64>>,
}

/// Builds the ROC curve of a parameter sweep. Each entry pairs a sweep
/// value with the detected epoch boundaries. TPR and FPR count boundaries
/// `1..n_epochs`; negatives are the `n_epochs - 1 - |truth|` unchanged
/// boundaries.
pub fn roc_from_sweep(
    detections: &[(f64, Vec<usize>)],
    truth: &[usize],
    n_epochs: usize,
) -> Result<RocCurve> {
    if truth.is_empty() {
        return Err(Error::NoTrueBoundaries);
    }
    let valid = |b: &usize| *b >= 1 && *b < n_epochs;
    if !truth.iter().all(valid) {
        return Err(Error::InvalidArgument("true boundary outside 1..n_epochs".into()));
    }
    let mut is_true = vec![false; n_epochs];
    for &b in truth {
        is_true[b] = true;
    }
    let n_true = is_true.iter().filter(|&&t| t).count();
    let n_neg = n_epochs - 1 - n_true;
    let mut pts: Vec<((f64, f64), Option<f64>)> = vec![((0.0, 0.0), None), ((1.0, 1.0), None)];
    for (tau, det) in detections {
        if !det.iter().all(valid) {
            return Err(Error::InvalidArgument("detection outside 1..n_epochs".into()));
        }
        let mut seen = vec![false; n_epochs];
        let (mut tp, mut fp) = (0usize, 0usize);
        for &b in det {
            if std::mem::replace(&mut seen[b], true) {
                continue;
            }
            if is_true[b] {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        let fpr = if n_neg == 0 { 0.0 } else { fp as f64 / n_neg as f64 };
        pts.push(((fpr, tp as f64 / n_true as f64), Some(*tau)));
    }
    pts.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
    let (points, tau_values) = pts.into_iter().unzip();
    Ok(RocCurve { points, tau_values })
}

/// Trapezoidal area under the curve; points sharing an FPR are collapsed to
/// their largest TPR first.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut pts = curve.points.clone();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut collapsed: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for (x, y) in pts {
        match collapsed.last_mut() {
            Some(last) if last.0 == x => last.1 = last.1.max(y),
            _ => collapsed.push((x, y)),
        }
    }
    collapsed
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}
