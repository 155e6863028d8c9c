//! Kohlmorgen/Lemm segmentation: epochs are summarized by Gaussian kernel
//! density estimates, compared in L2, and a state sequence over those
//! densities is decoded by dynamic programming with a switching penalty.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, Segmentation};
use crate::error::{Error, Result};
use crate::stats::TimeSeries;

const SIGMA_SUBSAMPLE: usize = 1000;

/// Kernel bandwidth: fixed, or the nearest-neighbour rule of thumb.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sigma {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlParams {
    pub window: usize,
    pub sigma: Sigma,
    /// Cost `C` added for every change of state.
    pub penalty: f64,
}

impl KlParams {
    fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::InvalidArgument("window must be at least 2".into()));
        }
        if let Sigma::Fixed(s) = self.sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!("bandwidth {s} must be positive")));
            }
        }
        if self.penalty.is_nan() || self.penalty < 0.0 {
            return Err(Error::InvalidArgument("penalty must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Epoch windows (columns are samples) with cached kernel self-sums.
struct KernelEpochs {
    windows: Vec<DMatrix<f64>>,
    sq_norms: Vec<DVector<f64>>,
    self_sums: Vec<f64>,
    inv_four_sigma2: f64,
    norm: f64,
}

impl KernelEpochs {
    fn new(windows: Vec<DMatrix<f64>>, sigma: f64) -> Self {
        let d = windows[0].nrows();
        let w = windows[0].ncols() as f64;
        let inv_four_sigma2 = 1.0 / (4.0 * sigma * sigma);
        let norm = 1.0 / (w * w * (4.0 * std::f64::consts::PI * sigma * sigma).powf(d as f64 / 2.0));
        let sq_norms: Vec<DVector<f64>> = windows
            .iter()
            .map(|m| DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.norm_squared())))
            .collect();
        let mut out = Self {
            windows,
            sq_norms,
            self_sums: Vec::new(),
            inv_four_sigma2,
            norm,
        };
        out.self_sums = (0..out.windows.len()).map(|i| out.cross_sum(i, i)).collect();
        out
    }

    /// `Σ_{w,v} exp(-|a_w - b_v|^2 / 4σ^2)`.
    fn cross_sum(&self, i: usize, j: usize) -> f64 {
        let gram = self.windows[i].transpose() * &self.windows[j];
        let (ni, nj) = (&self.sq_norms[i], &self.sq_norms[j]);
        let mut total = 0.0;
        for v in 0..gram.ncols() {
            for w in 0..gram.nrows() {
                let d2 = (ni[w] + nj[v] - 2.0 * gram[(w, v)]).max(0.0);
                total += (-d2 * self.inv_four_sigma2).exp();
            }
        }
        total
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let v = self.self_sums[i] - 2.0 * self.cross_sum(i, j) + self.self_sums[j];
        (v * self.norm).max(0.0)
    }
}

/// L2 distance between the Gaussian kernel density estimates of two
/// equally long windows (columns are samples).
pub fn kl_window_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, sigma: f64) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    if a.ncols() != b.ncols() || a.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth {sigma} must be positive")));
    }
    let k = KernelEpochs::new(vec![a.clone(), b.clone()], sigma);
    Ok(k.distance(0, 1))
}

/// Mean distance of each sample to its `D` nearest neighbours, computed on
/// an evenly strided subsample of at most 1000 points.
pub fn kl_sigma_heuristic(ts: &TimeSeries) -> Result<f64> {
    let t = ts.len();
    let stride = t.div_ceil(SIGMA_SUBSAMPLE).max(1);
    let pts: Vec<usize> = (0..t).step_by(stride).collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::TooFewSamples("need two samples for neighbour distances".into()));
    }
    let k = ts.dim().min(n - 1);
    let data = ts.data();
    let per_point: Vec<f64> = pts
        .par_iter()
        .map(|&i| {
            let mut d: Vec<f64> = pts
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (data.column(i) - data.column(j)).norm())
                .collect();
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            d[..k].iter().sum::<f64>() / k as f64
        })
        .collect();
    let sigma = per_point.iter().sum::<f64>() / n as f64;
    if !(sigma > 0.0) {
        return Err(Error::DegenerateVariance(sigma));
    }
    Ok(sigma)
}

/// Bandwidth for windowed density estimates. The rule of thumb is applied
/// at the sample size the densities are built from: it is averaged over the
/// windows themselves rather than computed once on the pooled series.
fn resolve_sigma(ts: &TimeSeries, window: usize, n: usize, sigma: Sigma) -> Result<f64> {
    match sigma {
        Sigma::Fixed(s) => Ok(s),
        Sigma::Auto => {
            let per: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|e| kl_sigma_heuristic(&ts.slice(e * window..(e + 1) * window)?))
                .collect::<Result<_>>()?;
            Ok(per.iter().sum::<f64>() / n as f64)
        }
    }
}

/// Pairwise kernel-density distances between consecutive non-overlapping
/// windows of `window` samples (a trailing partial window is dropped).
pub fn kl_distance_matrix(ts: &TimeSeries, window: usize, sigma: Sigma) -> Result<DistanceMatrix> {
    if window < 2 {
        return Err(Error::InvalidArgument("window must be at least 2".into()));
    }
    let n = ts.len() / window;
    if n < 2 {
        return Err(Error::TooFewSamples(format!(
            "need at least two windows of {window} samples, got {} samples",
            ts.len()
        )));
    }
    let sigma = resolve_sigma(ts, window, n, sigma)?;
    let windows = (0..n)
        .map(|e| ts.data().columns(e * window, window).into_owned())
        .collect();
    let k = KernelEpochs::new(windows, sigma);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| k.distance(i, j)).collect())
        .collect();
    let upper: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DistanceMatrix::from_upper(n, &upper))
}

/// Minimum-cost state sequence where the state of each epoch is one of the
/// epoch densities, the emission cost is the distance to that density and
/// every change of state costs `penalty`. Ties keep the previous state, else
/// the lowest state index.
pub fn kohlmorgen_lemm_from_distances(dm: &DistanceMatrix, penalty: f64) -> Result<Segmentation> {
    if penalty.is_nan() || penalty < 0.0 {
        return Err(Error::InvalidArgument("penalty must be nonnegative".into()));
    }
    let n = dm.len();
    if n == 0 {
        return Err(Error::InvalidArgument("no epochs".into()));
    }
    let mut cost: Vec<f64> = (0..n).map(|s| dm.get(0, s)).collect();
    // back[t][s]: state at t-1 on the best path ending in s at t.
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(n);
    back.push(Vec::new());
    for t in 1..n {
        let (best_prev, best_cost) = argmin(&cost);
        let switch = best_cost + penalty;
        let mut next = vec![0.0; n];
        let mut from = vec![0u32; n];
        for s in 0..n {
            let (c, f) = if cost[s] <= switch {
                (cost[s], s)
            } else {
                (switch, best_prev)
            };
            next[s] = c + dm.get(t, s);
            from[s] = f as u32;
        }
        cost = next;
        back.push(from);
    }
    let (mut state, _) = argmin(&cost);
    let mut states = vec![0usize; n];
    for t in (0..n).rev() {
        states[t] = state;
        if t > 0 {
            state = back[t][state] as usize;
        }
    }
    Ok(Segmentation::from_labels(&states))
}

fn argmin(v: &[f64]) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &c) in v.iter().enumerate().skip(1) {
        if c < best.1 {
            best = (i, c);
        }
    }
    best
}

pub fn kohlmorgen_lemm(ts: &TimeSeries, params: &KlParams) -> Result<Segmentation> {
    params.validate()?;
    if ts.len() < 2 * params.window {
        return Err(Error::TooFewSamples(format!(
            "need at least {} samples",
            2 * params.window
        )));
    }
    let dm = kl_distance_matrix(ts, params.window, params.sigma)?;
    kohlmorgen_lemm_from_distances(&dm, params.penalty)
}
