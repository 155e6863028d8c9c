//! Scoring of detectors and classifiers: ROC curves at epoch granularity,
//! principal angles, and Monte-Carlo experiment runners.

mod angles;
mod experiments;
mod roc;

pub use angles::{random_angle_density, subspace_angle, vector_angle};
pub use experiments::{
    default_tau_grid, run_classif_experiment, run_cpd_experiment, ClassifExperimentResult,
    ClassifExperimentSpec, ClassifMethod, ClassifResultRow, CpdAlgorithm, CpdExperimentResult,
    CpdResultRow, ExperimentSpec, Preprocessing,
};
pub use roc::{auc, roc_from_sweep, RocCurve};

use serde::{Deserialize, Serialize};

/// Median and quartiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub mean: f64,
    pub n: usize,
}

impl Summary {
    /// Quantiles by linear interpolation between order statistics. NaN for
    /// an empty sample.
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let mean = if n == 0 {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / n as f64
        };
        Self {
            median: quantile_sorted(&v, 0.5),
            q25: quantile_sorted(&v, 0.25),
            q75: quantile_sorted(&v, 0.75),
            mean,
            n,
        }
    }
}

pub(crate) fn quantile_sorted(v: &[f64], p: f64) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let h = p * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}
