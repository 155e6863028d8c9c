//! Likelihood-ratio test for stationarity of projected sources, selection of
//! the number of stationary sources, and the permutation-normalized BNISE
//! diagnostic.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky_logdet;
use crate::rng::{self, streams};
use crate::special::chi2_sf;
use crate::ssa::{find_stationary, ssa_loss, standardized_epoch_stats, SsaConfig};
use crate::stats::{epoch_moments, partition_epochs, EpochStats, TimeSeries};

/// Additive constant of the statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LrConstant {
    /// `-d M` with `M` the total sample count; the statistic vanishes exactly
    /// at the standardized null.
    #[default]
    Derived,
    /// `-d N` with `N` the number of epochs, kept for comparison with the
    /// published display of the statistic.
    Displayed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrTestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

impl LrTestResult {
    pub fn new(statistic: f64, dof: usize) -> Result<Self> {
        let p_value = chi2_sf(statistic.max(0.0), dof)?;
        Ok(Self {
            statistic,
            dof,
            p_value,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsSelection {
    pub chosen_ds: usize,
    /// `(d_s, test result)` for every candidate, in increasing `d_s`.
    pub per_ds: Vec<(usize, LrTestResult)>,
    pub threshold: f64,
}

impl DsSelection {
    pub fn per_ds_pvalues(&self) -> Vec<(usize, f64)> {
        self.per_ds.iter().map(|(d, r)| (*d, r.p_value)).collect()
    }
}

/// `Σ_i N_i (-log det Σ_i + |μ_i|^2 + tr Σ_i) - const`.
pub fn lr_statistic(stats: &[EpochStats], d: usize) -> Result<f64> {
    lr_statistic_with(stats, d, LrConstant::Derived)
}

pub fn lr_statistic_with(stats: &[EpochStats], d: usize, constant: LrConstant) -> Result<f64> {
    if stats.is_empty() {
        return Err(Error::InvalidArgument("no epochs".into()));
    }
    let mut total = 0.0;
    let mut m = 0usize;
    for s in stats {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.dim(),
            });
        }
        let (_, logdet) = cholesky_logdet(&s.cov)?;
        let n = s.count as f64;
        total += n * (-logdet + s.mean.norm_squared() + s.cov.trace());
        m += s.count;
    }
    let offset = match constant {
        LrConstant::Derived => (d * m) as f64,
        LrConstant::Displayed => (d * stats.len()) as f64,
    };
    Ok(total - offset)
}

/// Degrees of freedom `N d (d + 3) / 2`.
pub fn dof(n_epochs: usize, d: usize) -> Result<usize> {
    if n_epochs == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "degrees of freedom need at least one epoch and one dimension".into(),
        ));
    }
    Ok(n_epochs * d * (d + 3) / 2)
}

/// Likelihood-ratio test on the moments of already projected sources.
pub fn lr_test(stats: &[EpochStats], d: usize) -> Result<LrTestResult> {
    let statistic = lr_statistic(stats, d)?;
    LrTestResult::new(statistic, dof(stats.len(), d)?)
}

/// Tests the estimated stationary sources for every `d_s = 1..D-1` and picks
/// the largest `d_s` that is not rejected at `p_threshold` (0 if all are).
pub fn select_ds(ts: &TimeSeries, cfg: &SsaConfig, p_threshold: f64) -> Result<DsSelection> {
    if !(0.0..1.0).contains(&p_threshold) {
        return Err(Error::InvalidArgument(format!(
            "p threshold {p_threshold} outside [0, 1)"
        )));
    }
    let dim = ts.dim();
    if dim < 2 {
        return Err(Error::InvalidDimension("need at least 2 channels".into()));
    }
    let (stats, whitening) = standardized_epoch_stats(ts, cfg.n_epochs)?;
    let per_ds: Vec<(usize, LrTestResult)> = (1..dim)
        .into_par_iter()
        .map(|d_s| {
            let sol = crate::ssa::optimize_projection(
                &stats,
                d_s,
                crate::ssa::Objective::Minimize,
                cfg,
                whitening.clone(),
            )?;
            let b = sol.projection.matrix();
            let projected: Vec<EpochStats> = stats.iter().map(|s| s.project(b)).collect();
            Ok((d_s, lr_test(&projected, d_s)?))
        })
        .collect::<Result<_>>()?;
    let chosen_ds = per_ds
        .iter()
        .filter(|(_, r)| r.p_value >= p_threshold)
        .map(|(d, _)| *d)
        .max()
        .unwrap_or(0);
    Ok(DsSelection {
        chosen_ds,
        per_ds,
        threshold: p_threshold,
    })
}

/// Baseline-normalized integral stationary error for `d` stationary sources.
///
/// For each `d' = 1..=d` a stationary projection is fitted on the first half
/// of the series and its loss is evaluated on the second half. The baseline
/// is the loss of the same projection on the second half of time-shuffled
/// copies of the series; each term is the resulting z-score.
pub fn bnise(ts: &TimeSeries, d: usize, n_permutations: usize, cfg: &SsaConfig) -> Result<f64> {
    Ok(bnise_terms(ts, d, n_permutations, cfg)?.iter().sum())
}

/// The individual z-scores summed by [`bnise`], indexed by `d' - 1`.
pub fn bnise_terms(
    ts: &TimeSeries,
    d: usize,
    n_permutations: usize,
    cfg: &SsaConfig,
) -> Result<Vec<f64>> {
    if n_permutations < 2 {
        return Err(Error::InvalidArgument(
            "BNISE needs at least 2 permutations for a spread estimate".into(),
        ));
    }
    if d == 0 || d >= ts.dim() {
        return Err(Error::InvalidDimension(format!(
            "stationary dimension {d} must lie in 1..{}",
            ts.dim()
        )));
    }
    let half = ts.len() / 2;
    let first = ts.slice(0..half)?;
    let second = ts.slice(half..ts.len())?;

    let mut rng = rng::stream(cfg.seed, streams::PERMUTATION);
    let shuffled: Vec<TimeSeries> = (0..n_permutations)
        .map(|_| {
            let mut idx: Vec<usize> = (0..ts.len()).collect();
            idx.shuffle(&mut rng);
            ts.select(&idx[half..])
        })
        .collect::<Result<_>>()?;

    (1..=d)
        .into_par_iter()
        .map(|dp| {
            let sol = find_stationary(&first, dp, cfg)?;
            let b = sol.projection.matrix();
            let eval = |x: &TimeSeries| -> Result<f64> { held_out_loss(x, &sol.whitening, b, cfg) };
            let observed = eval(&second)?;
            let baseline: Vec<f64> = shuffled.iter().map(eval).collect::<Result<_>>()?;
            let n = baseline.len() as f64;
            let mean = baseline.iter().sum::<f64>() / n;
            let var = baseline.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::DegenerateVariance(sd));
            }
            Ok((observed - mean) / sd)
        })
        .collect()
}

fn held_out_loss(
    x: &TimeSeries,
    whitening: &crate::stats::WhiteningTransform,
    b: &DMatrix<f64>,
    cfg: &SsaConfig,
) -> Result<f64> {
    let part = partition_epochs(x, cfg.n_epochs)?;
    let stats: Vec<EpochStats> = epoch_moments(x, &part)?
        .iter()
        .map(|s| whitening.apply_stats(s))
        .collect();
    ssa_loss(b, &stats)
}

/// JSON-friendly rows `{ds, lambda, dof, p}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrReportRow {
    pub ds: usize,
    pub lambda: f64,
    pub dof: usize,
    pub p: f64,
}

impl DsSelection {
    pub fn report_rows(&self) -> Vec<LrReportRow> {
        self.per_ds
            .iter()
            .map(|(ds, r)| LrReportRow {
                ds: *ds,
                lambda: r.statistic,
                dof: r.dof,
                p: r.p_value,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn stat(var: f64, count: usize) -> EpochStats {
        EpochStats {
            mean: DVector::zeros(1),
            cov: DMatrix::from_element(1, 1, var),
            count,
        }
    }

    #[test]
    fn statistic_examples() {
        let null = vec![stat(1.0, 50); 4];
        assert_eq!(lr_statistic(&null, 1).unwrap(), 0.0);
        let one = lr_statistic(&[stat(2.0, 100)], 1).unwrap();
        assert!((one - 100.0 * (1.0 - 2f64.ln())).abs() < 1e-10);
        let displayed = lr_statistic_with(&null, 1, LrConstant::Displayed).unwrap();
        assert!((displayed - (200.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn dof_examples() {
        assert_eq!(dof(200, 1).unwrap(), 400);
        assert_eq!(dof(2, 2).unwrap(), 10);
        assert_eq!(dof(30, 6).unwrap(), 810);
        assert!(dof(0, 1).is_err());
    }

    #[test]
    fn p_value_matches_survival_function() {
        let r = LrTestResult::new(12.5, 7).unwrap();
        assert_eq!(r.p_value, chi2_sf(12.5, 7).unwrap());
    }

    #[test]
    fn epoch_order_does_not_matter() {
        let a = vec![stat(1.3, 40), stat(0.7, 60), stat(1.1, 50)];
        let mut b = a.clone();
        b.reverse();
        assert!((lr_statistic(&a, 1).unwrap() - lr_statistic(&b, 1).unwrap()).abs() < 1e-10);
    }
}
