//! Time series containers, epoch moments, whitening and Gaussian divergences.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_spd, cholesky_logdet, frobenius_dot, inv_sqrt_spd, symmetrize};

/// A `D x T` multivariate signal (channels by samples) with optional class
/// labels in `{1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
    labels: Option<Vec<u8>>,
}

impl TimeSeries {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 1 {
            return Err(Error::InvalidData("time series needs at least one channel".into()));
        }
        if data.ncols() < 2 {
            return Err(Error::TooFewSamples(format!(
                "time series needs at least 2 samples, got {}",
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite sample".into()));
        }
        Ok(Self { data, labels: None })
    }

    pub fn with_labels(data: DMatrix<f64>, labels: Vec<u8>) -> Result<Self> {
        let ts = Self::new(data)?;
        ts.labelled(labels)
    }

    /// Attaches labels; both classes must occur.
    pub fn labelled(mut self, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != 2) {
            return Err(Error::InvalidData(format!("class label {bad} not in {{1, 2}}")));
        }
        if !labels.contains(&1) || !labels.contains(&2) {
            return Err(Error::InvalidData("both classes must occur".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Builds from samples given as rows (`T x D`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let t = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidData("ragged sample rows".into()));
        }
        Self::new(DMatrix::from_fn(d, t, |i, j| rows[j][i]))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    /// One channel as a contiguous vector.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.row(c).iter().copied().collect()
    }

    /// Applies a `d x D` linear map to every sample; labels are kept.
    pub fn project(&self, m: &DMatrix<f64>) -> Result<Self> {
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: m.ncols(),
            });
        }
        Ok(Self {
            data: m * &self.data,
            labels: self.labels.clone(),
        })
    }

    /// Samples at the given time indices, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let data = self.data.select_columns(idx.iter());
        let ts = Self::new(data)?;
        match &self.labels {
            Some(l) => ts.labelled(idx.iter().map(|&i| l[i]).collect()),
            None => Ok(ts),
        }
    }

    /// Contiguous range of samples.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        let idx: Vec<usize> = range.collect();
        self.select(&idx)
    }

    /// Samples of one class as a `D x n` matrix.
    pub fn class_samples(&self, class: u8) -> Result<DMatrix<f64>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::InvalidData("time series has no labels".into()))?;
        let idx: Vec<usize> = (0..self.len()).filter(|&i| labels[i] == class).collect();
        Ok(self.data.select_columns(idx.iter()))
    }
}

/// Disjoint, ordered, contiguous epochs of a time series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochPartition {
    ranges: Vec<Range<usize>>,
}

impl EpochPartition {
    /// Validates ordering, disjointness and the `D + 2` minimum epoch size.
    pub fn from_ranges(ranges: Vec<Range<usize>>, dim: usize, len: usize) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidArgument("partition needs at least one epoch".into()));
        }
        let mut prev_end = 0;
        for r in &ranges {
            if r.start < prev_end || r.end > len || r.start >= r.end {
                return Err(Error::InvalidArgument(format!("invalid epoch range {r:?}")));
            }
            if r.len() < dim + 2 {
                return Err(Error::TooFewSamples(format!(
                    "epoch {r:?} has {} samples, need at least {}",
                    r.len(),
                    dim + 2
                )));
            }
            prev_end = r.end;
        }
        Ok(Self { ranges })
    }

    pub fn ranges(&self) -> &[Range<usize>] {
        &self.ranges
    }

    pub fn n_epochs(&self) -> usize {
        self.ranges.len()
    }

    /// Epoch index of every sample covered by the partition.
    pub fn epoch_of_samples(&self, len: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; len];
        for (e, r) in self.ranges.iter().enumerate() {
            for slot in &mut out[r.clone()] {
                *slot = Some(e);
            }
        }
        out
    }
}

/// Splits `ts` into `n_epochs` equal contiguous epochs; the remainder goes to
/// the last epoch.
pub fn partition_epochs(ts: &TimeSeries, n_epochs: usize) -> Result<EpochPartition> {
    partition_len(ts.len(), ts.dim(), n_epochs)
}

pub(crate) fn partition_len(len: usize, dim: usize, n_epochs: usize) -> Result<EpochPartition> {
    if n_epochs == 0 {
        return Err(Error::InvalidArgument("n_epochs must be positive".into()));
    }
    if n_epochs * (dim + 2) > len {
        return Err(Error::TooFewSamples(format!(
            "{n_epochs} epochs of at least {} samples need {} samples, got {len}",
            dim + 2,
            n_epochs * (dim + 2)
        )));
    }
    let size = len / n_epochs;
    let ranges = (0..n_epochs)
        .map(|i| {
            let end = if i + 1 == n_epochs { len } else { (i + 1) * size };
            i * size..end
        })
        .collect();
    EpochPartition::from_ranges(ranges, dim, len)
}

/// Mean and covariance estimated on one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub count: usize,
}

impl EpochStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Moments of the samples `B x` for a linear map `B`.
    pub fn project(&self, b: &DMatrix<f64>) -> EpochStats {
        let mut cov = b * &self.cov * b.transpose();
        symmetrize(&mut cov);
        EpochStats {
            mean: b * &self.mean,
            cov,
            count: self.count,
        }
    }

    pub fn as_gaussian(&self) -> Result<GaussianParams> {
        GaussianParams::new(self.mean.clone(), self.cov.clone())
    }
}

/// Sample mean (`1/n`) and covariance (`1/(n-1)`) of the columns of `x`.
pub fn sample_moments(x: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::TooFewSamples(format!("need 2 samples for a covariance, got {n}")));
    }
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let mut cov = &centered * centered.transpose() / (n as f64 - 1.0);
    symmetrize(&mut cov);
    Ok((mean, cov))
}

/// Per-epoch moments; every covariance must be positive definite.
pub fn epoch_moments(ts: &TimeSeries, part: &EpochPartition) -> Result<Vec<EpochStats>> {
    part.ranges()
        .iter()
        .map(|r| {
            if r.end > ts.len() {
                return Err(Error::InvalidArgument(format!(
                    "epoch {r:?} exceeds series length {}",
                    ts.len()
                )));
            }
            let block = ts.data().columns(r.start, r.len()).into_owned();
            let (mean, cov) = sample_moments(&block)?;
            check_spd(&cov)?;
            Ok(EpochStats {
                mean,
                cov,
                count: r.len(),
            })
        })
        .collect()
}

/// Parameters of a multivariate Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: cov.nrows(),
            });
        }
        Ok(Self { mean, cov })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// A Gaussian with its inverse covariance and log-determinant cached, for
/// evaluating many divergences against the same parameters.
#[derive(Debug, Clone)]
pub struct PreparedGaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    inv: DMatrix<f64>,
    logdet: f64,
}

impl PreparedGaussian {
    pub fn new(p: &GaussianParams) -> Result<Self> {
        let (chol, logdet) = cholesky_logdet(&p.cov)?;
        let mut inv = chol.inverse();
        symmetrize(&mut inv);
        Ok(Self {
            mean: p.mean.clone(),
            cov: p.cov.clone(),
            inv,
            logdet,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `KL(self || other)`, clamped at zero.
    pub fn kl_to(&self, other: &PreparedGaussian) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let diff = &other.mean - &self.mean;
        let maha = diff.dot(&(&other.inv * &diff));
        let trace = frobenius_dot(&other.inv, &self.cov);
        let kl = 0.5 * (trace + maha - self.dim() as f64 + other.logdet - self.logdet);
        Ok(kl.max(0.0))
    }
}

/// Closed-form `KL(N(p) || N(q))`.
pub fn kl_gauss(p: &GaussianParams, q: &GaussianParams) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let p = PreparedGaussian::new(p)?;
    let q = PreparedGaussian::new(q)?;
    p.kl_to(&q)
}

/// `KL(p||q)/2 + KL(q||p)/2`.
pub fn symmetrized_kl(p: &GaussianParams, q: &GaussianParams) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    let p = PreparedGaussian::new(p)?;
    let q = PreparedGaussian::new(q)?;
    symmetrized_kl_prepared(&p, &q)
}

pub fn symmetrized_kl_prepared(p: &PreparedGaussian, q: &PreparedGaussian) -> Result<f64> {
    let a = p.kl_to(q)?;
    let b = q.kl_to(p)?;
    // Sort the two halves so the sum does not depend on argument order.
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    Ok(0.5 * lo + 0.5 * hi)
}

/// Affine map `x -> W (x - center)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningTransform {
    pub matrix: DMatrix<f64>,
    pub center: DVector<f64>,
}

impl WhiteningTransform {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            center: DVector::zeros(dim),
        }
    }

    pub fn apply(&self, ts: &TimeSeries) -> Result<TimeSeries> {
        if ts.dim() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                got: ts.dim(),
            });
        }
        let mut centered = ts.data().clone();
        for mut col in centered.column_iter_mut() {
            col -= &self.center;
        }
        let out = TimeSeries::new(&self.matrix * centered)?;
        match ts.labels() {
            Some(l) => out.labelled(l.to_vec()),
            None => Ok(out),
        }
    }

    /// Moments of the transformed data given moments of the raw data.
    pub fn apply_stats(&self, s: &EpochStats) -> EpochStats {
        let mut cov = &self.matrix * &s.cov * self.matrix.transpose();
        symmetrize(&mut cov);
        EpochStats {
            mean: &self.matrix * (&s.mean - &self.center),
            cov,
            count: s.count,
        }
    }
}

/// Centers and whitens with the pooled sample covariance, `W = Σ^{-1/2}`.
pub fn whiten(ts: &TimeSeries) -> Result<(TimeSeries, WhiteningTransform)> {
    let (center, cov) = sample_moments(ts.data())?;
    let matrix = inv_sqrt_spd(&cov)?;
    let tf = WhiteningTransform { matrix, center };
    Ok((tf.apply(ts)?, tf))
}

/// Standardizes epoch moments so that the average epoch mean is 0 and the
/// average epoch covariance is `I`. Returns the transformed moments and the
/// transform that produces them from raw observations.
pub fn standardize_epochs(stats: &[EpochStats]) -> Result<(Vec<EpochStats>, WhiteningTransform)> {
    let first = stats
        .first()
        .ok_or_else(|| Error::InvalidArgument("no epochs".into()))?;
    let d = first.dim();
    let n = stats.len() as f64;
    let mut center = DVector::zeros(d);
    let mut avg_cov = DMatrix::zeros(d, d);
    for s in stats {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.dim(),
            });
        }
        center += &s.mean;
        avg_cov += &s.cov;
    }
    center /= n;
    avg_cov /= n;
    let matrix = inv_sqrt_spd(&avg_cov)?;
    let tf = WhiteningTransform { matrix, center };
    let out = stats.iter().map(|s| tf.apply_stats(s)).collect();
    Ok((out, tf))
}

/// Centers and whitens so that the *average epoch* has mean 0 and covariance
/// `I`; coincides with [`whiten`] when all epoch means agree.
pub fn whiten_by_epochs(
    ts: &TimeSeries,
    part: &EpochPartition,
) -> Result<(TimeSeries, WhiteningTransform)> {
    let stats = epoch_moments(ts, part)?;
    let (_, tf) = standardize_epochs(&stats)?;
    Ok((tf.apply(ts)?, tf))
}

/// Shrinkage intensity: a fixed value or the analytic Ledoit-Wolf choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shrinkage {
    Fixed(f64),
    Auto,
}

/// Ledoit-Wolf shrinkage intensity towards `ν I` for the columns of `x`.
pub fn ledoit_wolf_intensity(x: &DMatrix<f64>) -> Result<f64> {
    let (d, n) = x.shape();
    if n < 2 {
        return Err(Error::TooFewSamples(format!("need 2 samples, got {n}")));
    }
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    let s = &centered * centered.transpose() / n as f64;
    let nu = s.trace() / d as f64;
    let mut delta = s.clone();
    for i in 0..d {
        delta[(i, i)] -= nu;
    }
    let delta = delta.norm_squared();
    if delta <= 0.0 {
        return Ok(1.0);
    }
    let mut beta = 0.0;
    for col in centered.column_iter() {
        let outer = col * col.transpose();
        beta += (outer - &s).norm_squared();
    }
    beta /= (n as f64) * (n as f64);
    Ok((beta.min(delta) / delta).clamp(0.0, 1.0))
}

/// `(1 - γ) Σ + γ ν I` with `ν = tr(Σ)/d`. The columns of `x` are samples.
pub fn shrinkage_cov(x: &DMatrix<f64>, gamma: Shrinkage) -> Result<DMatrix<f64>> {
    let (_, cov) = sample_moments(x)?;
    let gamma = match gamma {
        Shrinkage::Fixed(g) if (0.0..=1.0).contains(&g) => g,
        Shrinkage::Fixed(g) => {
            return Err(Error::InvalidArgument(format!("shrinkage {g} outside [0, 1]")))
        }
        Shrinkage::Auto => ledoit_wolf_intensity(x)?,
    };
    Ok(shrink(&cov, gamma))
}

pub(crate) fn shrink(cov: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let d = cov.nrows();
    let nu = cov.trace() / d as f64;
    let mut out = cov * (1.0 - gamma);
    for i in 0..d {
        out[(i, i)] += gamma * nu;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian_series(d: usize, t: usize, seed: u64) -> TimeSeries {
        let mut r = rng::stream(seed, 0);
        TimeSeries::new(DMatrix::from_fn(d, t, |_, _| r.sample(StandardNormal))).unwrap()
    }

    #[test]
    fn partition_equal_and_remainder() {
        let ts = gaussian_series(2, 200, 1);
        let p = partition_epochs(&ts, 4).unwrap();
        assert!(p.ranges().iter().all(|r| r.len() == 50));
        let ts = gaussian_series(2, 203, 1);
        let p = partition_epochs(&ts, 4).unwrap();
        let sizes: Vec<usize> = p.ranges().iter().map(|r| r.len()).collect();
        assert_eq!(sizes, vec![50, 50, 50, 53]);
        let ts = gaussian_series(5, 20, 1);
        assert!(matches!(partition_epochs(&ts, 10), Err(Error::TooFewSamples(_))));
    }

    #[test]
    fn moments_hand_computed() {
        let data = DMatrix::from_row_slice(2, 4, &[0.0, 2.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0]);
        let ts = TimeSeries::new(data).unwrap();
        let part = EpochPartition::from_ranges(vec![0..4], 2, 4).unwrap();
        let s = &epoch_moments(&ts, &part).unwrap()[0];
        assert!((s.mean[0] - 1.0).abs() < 1e-15 && (s.mean[1] - 1.0).abs() < 1e-15);
        assert!((s.cov[(0, 0)] - 4.0 / 3.0).abs() < 1e-15);
        assert!((s.cov[(1, 1)] - 4.0 / 3.0).abs() < 1e-15);
        assert!(s.cov[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn constant_epoch_is_singular() {
        let ts = TimeSeries::new(DMatrix::from_element(2, 40, 3.0)).unwrap();
        let part = partition_epochs(&ts, 2).unwrap();
        assert!(matches!(epoch_moments(&ts, &part), Err(Error::SingularCovariance)));
    }

    #[test]
    fn iid_epoch_moments_near_standard() {
        let ts = gaussian_series(3, 40_000, 7);
        let part = partition_epochs(&ts, 4).unwrap();
        for s in epoch_moments(&ts, &part).unwrap() {
            assert!(s.mean.amax() < 0.05);
            let dev = &s.cov - DMatrix::<f64>::identity(3, 3);
            assert!(dev.amax() < 0.1);
        }
    }

    #[test]
    fn whiten_is_idempotent() {
        let ts = gaussian_series(2, 5000, 2);
        let (w1, _) = whiten(&ts).unwrap();
        let (_, tf2) = whiten(&w1).unwrap();
        assert!((&tf2.matrix - DMatrix::<f64>::identity(2, 2)).amax() < 1e-8);
        assert!(tf2.center.amax() < 1e-8);

    }

    #[test]
    fn whiten_diagonal_case() {
        // With independent channels the inverse square root is diagonal on the
        // eigendirections: channel scaled by 3 gets 1/(3 s) with s its raw std.
        let mut r = rng::stream(4, 0);
        let data = DMatrix::from_fn(2, 20_000, |i, _| {
            let z: f64 = r.sample(StandardNormal);
            if i == 0 { 3.0 * z } else { z }
        });
        let (_, tf) = whiten(&TimeSeries::new(data).unwrap()).unwrap();
        assert!((tf.matrix[(0, 0)] - 1.0 / 3.0).abs() < 0.01);
        assert!((tf.matrix[(1, 1)] - 1.0).abs() < 0.03);
    }

    #[test]
    fn whiten_rank_deficient() {
        let ts = gaussian_series(1, 100, 3);
        let mut data = DMatrix::zeros(2, 100);
        data.row_mut(0).copy_from(&ts.data().row(0));
        data.row_mut(1).copy_from(&ts.data().row(0));
        let dup = TimeSeries::new(data).unwrap();
        assert!(matches!(whiten(&dup), Err(Error::SingularCovariance)));
    }

    #[test]
    fn whitened_epochs_average_to_standard() {
        let mut ts = gaussian_series(3, 3000, 5);
        // Give epochs different means and scales.
        let mut data = ts.data().clone();
        for t in 0..3000 {
            let e = t / 1000;
            data[(0, t)] = data[(0, t)] * (1.0 + e as f64) + e as f64;
        }
        ts = TimeSeries::new(data).unwrap();
        let part = partition_epochs(&ts, 3).unwrap();
        let (w, _) = whiten_by_epochs(&ts, &part).unwrap();
        let stats = epoch_moments(&w, &part).unwrap();
        let mut mean = DVector::zeros(3);
        let mut cov = DMatrix::zeros(3, 3);
        for s in &stats {
            mean += &s.mean;
            cov += &s.cov;
        }
        mean /= 3.0;
        cov /= 3.0;
        assert!(mean.amax() < 1e-8);
        assert!((cov - DMatrix::<f64>::identity(3, 3)).amax() < 1e-8);
    }

    #[test]
    fn kl_closed_forms() {
        let z = GaussianParams::standard(2);
        assert!(kl_gauss(&z, &z).unwrap().abs() < 1e-15);
        let mu = GaussianParams::new(
            DVector::from_vec(vec![0.3, -1.2]),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let expected = (0.09 + 1.44) / 2.0;
        assert!((kl_gauss(&mu, &z).unwrap() - expected).abs() < 1e-14);

        let a = GaussianParams::new(DVector::zeros(1), DMatrix::from_element(1, 1, 1.0)).unwrap();
        let b = GaussianParams::new(DVector::zeros(1), DMatrix::from_element(1, 1, 2.0)).unwrap();
        // 0.5 (σp²/σq² - 1 + ln(σq²/σp²)) evaluated independently.
        let ab = 0.5 * (0.5 - 1.0 + 2f64.ln());
        let ba = 0.5 * (2.0 - 1.0 - 2f64.ln());
        assert!((kl_gauss(&a, &b).unwrap() - ab).abs() < 1e-15);
        assert!((ab - 0.096574).abs() < 1e-6);
        let sym = symmetrized_kl(&a, &b).unwrap();
        assert!((sym - 0.125).abs() < 1e-15);
        assert!((sym - 0.5 * (ab + ba)).abs() < 1e-15);
        assert_eq!(sym.to_bits(), symmetrized_kl(&b, &a).unwrap().to_bits());
        assert!(symmetrized_kl(&a, &a).unwrap().abs() < 1e-15);
        assert!(matches!(
            kl_gauss(&a, &z),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn shrinkage_examples() {
        let x = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 2.0, 5.0, 1.0, -3.0]);
        let (_, cov) = sample_moments(&x).unwrap();
        let s0 = shrinkage_cov(&x, Shrinkage::Fixed(0.0)).unwrap();
        assert!((&s0 - &cov).amax() < 1e-15);
        let s1 = shrinkage_cov(&x, Shrinkage::Fixed(1.0)).unwrap();
        let nu = cov.trace() / 2.0;
        assert!((s1 - DMatrix::<f64>::identity(2, 2) * nu).amax() < 1e-14);

        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
        let half = shrink(&diag, 0.5);
        assert!((half[(0, 0)] - 1.5).abs() < 1e-15 && (half[(1, 1)] - 0.5).abs() < 1e-15);
        assert!(shrinkage_cov(&x, Shrinkage::Fixed(1.5)).is_err());
        let g = ledoit_wolf_intensity(&x).unwrap();
        assert!((0.0..=1.0).contains(&g));
    }
}
