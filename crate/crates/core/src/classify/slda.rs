//! Gradient-trained discriminants on the unit sphere.
//!
//! The trade-off objective is `α sqrt(F(w)) - (1 - α) P(w)` where `F` is the
//! Fisher ratio and `P` a penalty: the summed per-epoch non-stationarity
//! `Φ_ns` (sLDA), a random quadratic form (randLDA), or nothing (gradLDA,
//! `α = 1`). It is maximized by projected gradient ascent with Armijo
//! backtracking from several random starts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BiasConvention, ClassEpochStats, ClassMoments, LinearClassifier, Method};
use crate::error::{Error, Result};
use crate::rng::{self, streams};
use crate::stats::TimeSeries;

const ARMIJO_SLOPE: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const TIE_TOL: f64 = 1e-12;

/// Form of the per-epoch non-stationarity term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiForm {
    /// Univariate Gaussian KL `m²/2p + (r - 1 - ln r)/2`, zero at equality.
    #[default]
    Kl,
    /// `m²/2p + r/2 - 1 - ln r` as printed alongside the published objective.
    Displayed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffConfig {
    pub alpha_grid: Vec<f64>,
    pub k_folds: usize,
    pub n_epochs: usize,
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub bias: BiasConvention,
    pub phi: PhiForm,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        Self {
            alpha_grid: vec![0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
            k_folds: 5,
            n_epochs: 7,
            seed: 0,
            restarts: 5,
            max_iterations: 1000,
            tolerance: 1e-7,
            bias: BiasConvention::Midpoint,
            phi: PhiForm::Kl,
        }
    }
}

impl TradeoffConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iterations == 0 || !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "restarts, max_iterations and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Projected quadratic form `w^T M w`, required to be positive.
fn quad(w: &DVector<f64>, m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let mw = m * w;
    let v = w.dot(&mw);
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::DegenerateVariance(v));
    }
    Ok((v, mw))
}

fn phi_and_grad(
    w: &DVector<f64>,
    epoch: &ClassMoments,
    pooled: &ClassMoments,
    form: PhiForm,
) -> Result<(f64, DVector<f64>)> {
    let delta = &epoch.mean - &pooled.mean;
    let m = w.dot(&delta);
    let (p, pw) = quad(w, &pooled.cov)?;
    let (q, qw) = quad(w, &epoch.cov)?;
    let r = q / p;
    // ∂r/∂w = 2 (Σ_i w - r Σ̂ w) / p
    let dr = (&qw - &pw * r) * (2.0 / p);
    let mean_term = m * m / (2.0 * p);
    let d_mean = &delta * (m / p) - &pw * (m * m / (p * p));
    let (var_term, dvar_coef) = match form {
        PhiForm::Kl => (0.5 * (r - 1.0 - r.ln()), 0.5 * (1.0 - 1.0 / r)),
        PhiForm::Displayed => (0.5 * r - 1.0 - r.ln(), 0.5 - 1.0 / r),
    };
    Ok((mean_term + var_term, d_mean + dr * dvar_coef))
}

/// Non-stationarity of a projected epoch relative to the projected pooled
/// class distribution (univariate Gaussian KL).
pub fn phi_ns(w: &DVector<f64>, epoch: &ClassMoments, pooled: &ClassMoments) -> Result<f64> {
    phi_ns_with(w, epoch, pooled, PhiForm::Kl)
}

pub fn phi_ns_with(
    w: &DVector<f64>,
    epoch: &ClassMoments,
    pooled: &ClassMoments,
    form: PhiForm,
) -> Result<f64> {
    phi_and_grad(w, epoch, pooled, form).map(|(v, _)| v)
}

enum Penalty<'a> {
    Phi(PhiForm),
    Quadratic(&'a DMatrix<f64>),
}

fn sqrt_fisher_and_grad(w: &DVector<f64>, stats: &ClassEpochStats) -> Result<(f64, DVector<f64>)> {
    let delta = stats.mean_diff();
    let a = w.dot(&delta);
    let (s, sw) = quad(w, &stats.within_scatter())?;
    let root = s.sqrt();
    let value = a.abs() / root;
    let sign = if a >= 0.0 { 1.0 } else { -1.0 };
    let grad = (&delta / root - &sw * (a / (s * root))) * sign;
    Ok((value, grad))
}

fn objective(
    w: &DVector<f64>,
    alpha: f64,
    stats: &ClassEpochStats,
    penalty: &Penalty,
) -> Result<(f64, DVector<f64>)> {
    let (f, gf) = sqrt_fisher_and_grad(w, stats)?;
    let (pen, gp) = match penalty {
        Penalty::Phi(form) => {
            let mut total = 0.0;
            let mut grad = DVector::zeros(w.len());
            for epoch in &stats.epochs {
                for j in 0..2 {
                    let (v, g) = phi_and_grad(w, &epoch[j], &stats.pooled[j], *form)?;
                    total += v;
                    grad += g;
                }
            }
            (total, grad)
        }
        Penalty::Quadratic(r) => {
            let rw = *r * w;
            let rtw = r.transpose() * w;
            (w.dot(&rw), rw + rtw)
        }
    };
    Ok((alpha * f - (1.0 - alpha) * pen, gf * alpha - gp * (1.0 - alpha)))
}

/// `α sqrt(F(w)) - (1 - α) Σ_i Σ_j Φ_ns`.
pub fn slda_loss(w: &DVector<f64>, alpha: f64, stats: &ClassEpochStats) -> Result<f64> {
    check_alpha(alpha)?;
    objective(w, alpha, stats, &Penalty::Phi(PhiForm::Kl)).map(|(v, _)| v)
}

/// Euclidean gradient of [`slda_loss`].
pub fn slda_gradient(w: &DVector<f64>, alpha: f64, stats: &ClassEpochStats) -> Result<DVector<f64>> {
    check_alpha(alpha)?;
    objective(w, alpha, stats, &Penalty::Phi(PhiForm::Kl)).map(|(_, g)| g)
}

/// Projected gradient ascent on the unit sphere from `w0`.
fn ascend(
    w0: DVector<f64>,
    alpha: f64,
    stats: &ClassEpochStats,
    penalty: &Penalty,
    cfg: &TradeoffConfig,
) -> Result<(DVector<f64>, f64)> {
    let mut w = w0.normalize();
    let (mut value, mut grad) = objective(&w, alpha, stats, penalty)?;
    let mut step = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        let tangent = &grad - &w * grad.dot(&w);
        let gn = tangent.norm();
        if gn < cfg.tolerance {
            break;
        }
        // Never propose moving more than about one radian.
        let mut trial = (2.0 * step).min(1.0 / gn);
        let mut accepted = None;
        while trial >= MIN_STEP {
            let candidate = (&w + &tangent * trial).normalize();
            match objective(&candidate, alpha, stats, penalty) {
                Ok((v, g)) if v >= value + ARMIJO_SLOPE * trial * gn * gn => {
                    accepted = Some((candidate, v, g));
                    break;
                }
                Ok(_) | Err(Error::DegenerateVariance(_)) => trial *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((c, v, g)) = accepted else {
            break;
        };
        step = trial;
        w = c;
        value = v;
        grad = g;
    }
    Ok((w, value))
}

fn fit_direction(
    stats: &ClassEpochStats,
    alpha: f64,
    penalty: &Penalty,
    cfg: &TradeoffConfig,
) -> Result<DVector<f64>> {
    cfg.validate()?;
    check_alpha(alpha)?;
    let d = stats.dim();
    let runs: Vec<(DVector<f64>, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut g = rng::stream(rng::derive_seed(cfg.seed, r as u64), streams::RESTARTS);
            let w0 = DVector::from_fn(d, |_, _| g.sample::<f64, _>(StandardNormal));
            ascend(w0, alpha, stats, penalty, cfg)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 + TIE_TOL {
            best = i;
        }
    }
    let mut w = runs[best].0.clone();
    if w.dot(&stats.mean_diff()) < 0.0 {
        w = -w;
    }
    Ok(w)
}

fn finish(
    w: DVector<f64>,
    stats: &ClassEpochStats,
    cfg: &TradeoffConfig,
    method: Method,
    alpha: f64,
) -> LinearClassifier {
    let b = cfg.bias.bias(&w, &stats.pooled[0].mean, &stats.pooled[1].mean);
    LinearClassifier {
        w,
        b,
        method,
        alpha: Some(alpha),
    }
}

/// sLDA with a fixed trade-off `alpha` on `cfg.n_epochs` contiguous epochs.
pub fn slda_train(data: &TimeSeries, alpha: f64, cfg: &TradeoffConfig) -> Result<LinearClassifier> {
    let stats = ClassEpochStats::from_series(data, cfg.n_epochs)?;
    let w = fit_direction(&stats, alpha, &Penalty::Phi(cfg.phi), cfg)?;
    let method = if alpha == 1.0 { Method::GradLda } else { Method::Slda };
    Ok(finish(w, &stats, cfg, method, alpha))
}

/// Fisher-ratio maximization by gradient ascent (sLDA at `α = 1`).
pub fn grad_lda_train(data: &TimeSeries, cfg: &TradeoffConfig) -> Result<LinearClassifier> {
    let stats = ClassEpochStats::from_series(data, 1)?;
    let w = fit_direction(&stats, 1.0, &Penalty::Phi(cfg.phi), cfg)?;
    Ok(finish(w, &stats, cfg, Method::GradLda, 1.0))
}

/// `d x d` matrix of independent uniform `[0, 1]` entries.
pub fn random_penalty(d: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng::stream(seed, streams::PENALTY);
    DMatrix::from_fn(d, d, |_, _| g.random::<f64>())
}

/// Control classifier whose penalty is a random quadratic form `w^T R w`.
pub fn rand_lda_train(
    data: &TimeSeries,
    alpha: f64,
    seed: u64,
    cfg: &TradeoffConfig,
) -> Result<LinearClassifier> {
    let stats = ClassEpochStats::from_series(data, 1)?;
    let r = random_penalty(stats.dim(), seed);
    let w = fit_direction(&stats, alpha, &Penalty::Quadratic(&r), cfg)?;
    Ok(finish(w, &stats, cfg, Method::RandLda, alpha))
}

/// Cross-validation summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub chosen_alpha: f64,
    /// `(alpha, cross-validated error)` for every grid value.
    pub errors: Vec<(f64, f64)>,
}

/// Stratified fold index of every sample.
fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut g = rng::stream(seed, streams::FOLDS);
    let mut fold = vec![0; labels.len()];
    for c in [1u8, 2] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut g);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    fold
}

/// Chooses `α` from the grid by stratified k-fold cross-validation (ties go
/// to the larger `α`), then retrains on all data.
pub fn slda_cv_train(data: &TimeSeries, cfg: &TradeoffConfig) -> Result<(LinearClassifier, CvReport)> {
    if cfg.alpha_grid.is_empty() {
        return Err(Error::InvalidArgument("empty alpha grid".into()));
    }
    for &a in &cfg.alpha_grid {
        check_alpha(a)?;
    }
    if cfg.k_folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    let labels = data
        .labels()
        .ok_or_else(|| Error::InvalidData("training series has no labels".into()))?;
    let smallest = [1u8, 2]
        .iter()
        .map(|&c| labels.iter().filter(|&&l| l == c).count())
        .min()
        .unwrap_or(0);
    if cfg.k_folds > smallest {
        return Err(Error::InvalidArgument(format!(
            "{} folds but the smaller class has {smallest} samples",
            cfg.k_folds
        )));
    }
    let folds = stratified_folds(labels, cfg.k_folds, cfg.seed);
    let splits: Vec<(TimeSeries, TimeSeries)> = (0..cfg.k_folds)
        .map(|f| {
            let train: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..labels.len()).filter(|&i| folds[i] == f).collect();
            Ok((data.select(&train)?, data.select(&test)?))
        })
        .collect::<Result<_>>()?;

    let errors: Vec<(f64, f64)> = cfg
        .alpha_grid
        .par_iter()
        .map(|&alpha| {
            let mut wrong = 0.0;
            for (train, test) in &splits {
                let c = slda_train(train, alpha, cfg)?;
                wrong += c.error_rate(test)? * test.len() as f64;
            }
            Ok((alpha, wrong / labels.len() as f64))
        })
        .collect::<Result<_>>()?;

    let mut chosen = errors[0];
    for &(a, e) in &errors[1..] {
        if e < chosen.1 - TIE_TOL || ((e - chosen.1).abs() <= TIE_TOL && a > chosen.0) {
            chosen = (a, e);
        }
    }
    let classifier = slda_train(data, chosen.0, cfg)?;
    Ok((
        classifier,
        CvReport {
            chosen_alpha: chosen.0,
            errors,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(m: f64, v: f64) -> ClassMoments {
        ClassMoments {
            mean: DVector::from_element(1, m),
            cov: DMatrix::from_element(1, 1, v),
        }
    }

    #[test]
    fn phi_examples() {
        let w = DVector::from_element(1, 1.0);
        assert_eq!(phi_ns(&w, &moments(0.3, 1.7), &moments(0.3, 1.7)).unwrap(), 0.0);
        assert!((phi_ns(&w, &moments(1.0, 1.0), &moments(0.0, 1.0)).unwrap() - 0.5).abs() < 1e-15);
        let v = phi_ns(&w, &moments(0.0, 2.0), &moments(0.0, 1.0)).unwrap();
        assert!((v - 0.5 * (1.0 - 2f64.ln())).abs() < 1e-15);
        assert!(matches!(
            phi_ns(&w, &moments(0.0, 0.0), &moments(0.0, 1.0)),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn loss_at_alpha_one_is_root_fisher() {
        let st = ClassEpochStats {
            epochs: vec![[moments(0.5, 2.0), moments(1.0, 1.0)]],
            pooled: [moments(0.0, 1.0), moments(1.0, 1.0)],
        };
        let w = DVector::from_element(1, 1.0);
        assert!((slda_loss(&w, 1.0, &st).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        // At α = 0 only the penalty remains.
        let phi = phi_ns(&w, &st.epochs[0][0], &st.pooled[0]).unwrap();
        assert!((slda_loss(&w, 0.0, &st).unwrap() + phi).abs() < 1e-15);
        assert!(slda_loss(&w, 1.5, &st).is_err());
    }

    #[test]
    fn random_penalty_is_seeded_uniform() {
        let a = random_penalty(4, 3);
        assert_eq!(a, random_penalty(4, 3));
        assert!(a.iter().all(|&v| (0.0..1.0).contains(&v)));
        assert_ne!(a, random_penalty(4, 4));
    }
}
