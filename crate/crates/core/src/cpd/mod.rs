//! Change-point detectors reporting at epoch granularity.
//!
//! A boundary index `b` in `1..n_epochs` marks a change between epochs
//! `b - 1` and `b`.

mod cusum;
mod kohlmorgen;
mod slcd;

pub use cusum::{cusum_detection_times, cusum_weighted, default_theta_grid, CusumParams};
pub use kohlmorgen::{
    kl_distance_matrix, kl_sigma_heuristic, kl_window_distance, kohlmorgen_lemm,
    kohlmorgen_lemm_from_distances, KlParams, Sigma,
};
pub use slcd::{single_linkage_cluster, slcd_detect, slcd_distance_matrix, slcd_from_distances};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Epoch boundaries flagged as change points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub boundaries: Vec<usize>,
    pub n_epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

impl Segmentation {
    pub fn new(boundaries: Vec<usize>, n_epochs: usize) -> Result<Self> {
        Self::with_scores(boundaries, n_epochs, None)
    }

    pub fn with_scores(
        boundaries: Vec<usize>,
        n_epochs: usize,
        scores: Option<Vec<f64>>,
    ) -> Result<Self> {
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("boundaries must be strictly increasing".into()));
        }
        if boundaries.iter().any(|&b| b == 0 || b >= n_epochs) {
            return Err(Error::InvalidArgument(format!(
                "boundary outside 1..{n_epochs}"
            )));
        }
        if let Some(s) = &scores {
            if s.len() != boundaries.len() {
                return Err(Error::DimensionMismatch {
                    expected: boundaries.len(),
                    got: s.len(),
                });
            }
        }
        Ok(Self {
            boundaries,
            n_epochs,
            scores,
        })
    }

    /// Boundaries between consecutive epochs whose labels differ.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let boundaries = (1..labels.len())
            .filter(|&i| labels[i] != labels[i - 1])
            .collect();
        Self {
            boundaries,
            n_epochs: labels.len(),
            scores: None,
        }
    }

    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }
}

/// Symmetric, nonnegative matrix of pairwise epoch dissimilarities with an
/// exactly zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    values: DMatrix<f64>,
}

impl DistanceMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: values.ncols(),
            });
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument("distance diagonal must be zero".into()));
            }
            for j in 0..i {
                let (a, b) = (values[(i, j)], values[(j, i)]);
                if !(a >= 0.0) || !(b >= 0.0) {
                    return Err(Error::InvalidArgument("distances must be nonnegative".into()));
                }
                if (a - b).abs() > 1e-10 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::InvalidArgument("distance matrix is not symmetric".into()));
                }
            }
        }
        Ok(Self { values })
    }

    pub(crate) fn from_upper(n: usize, upper: &[f64]) -> Self {
        let mut values = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                values[(i, j)] = upper[k];
                values[(j, i)] = upper[k];
                k += 1;
            }
        }
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Median of the strictly upper-triangular entries (0 for `n < 2`).
    pub fn median_off_diagonal(&self) -> f64 {
        let n = self.len();
        let mut v: Vec<f64> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| self.values[(i, j)])
            .collect();
        if v.is_empty() {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len();
        if m % 2 == 1 {
            v[m / 2]
        } else {
            0.5 * (v[m / 2 - 1] + v[m / 2])
        }
    }
}
