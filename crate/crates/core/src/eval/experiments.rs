//! Monte-Carlo runners. Realization `r` of a run with seed `s` uses the
//! derived seed `derive_seed(s, r)` for its data and every stochastic fit, so
//! tables are reproducible and independent of the thread count.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auc, logspace, roc_from_sweep, vector_angle, Summary};
use crate::classify::{
    grad_lda_train, lda_train, rand_lda_train, rlda_train, slda_cv_train, slda_train,
    LinearClassifier, TradeoffConfig,
};
use crate::cpd::{
    default_theta_grid, kl_distance_matrix, kohlmorgen_lemm_from_distances, slcd_distance_matrix,
    slcd_from_distances, cusum_weighted, CusumParams, Sigma,
};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::ssa::{find_most_nonstationary, random_projection, SsaConfig};
use crate::stats::{Shrinkage, TimeSeries};
use crate::synth::{gen_cpd_dataset, gen_classif_dataset, ClassifSynthSpec, ClassifVariant, CpdSynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpdAlgorithm {
    Slcd,
    Cusum,
    Kl,
}

/// Signal the detector is run on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    /// Raw observations.
    None,
    /// The `d_n` most non-stationary SSA sources.
    SsaMax,
    /// A uniformly random `d_n`-dimensional projection.
    RandomProjection,
}

impl Preprocessing {
    pub fn name(self) -> &'static str {
        match self {
            Preprocessing::None => "none",
            Preprocessing::SsaMax => "ssa_max",
            Preprocessing::RandomProjection => "random_projection",
        }
    }
}

/// Default sweep: SLCD cluster counts 2..=10; CUSUM thresholds and K/L
/// penalty multipliers log-spaced (the K/L multiplier scales the median
/// inter-epoch distance of each realization).
pub fn default_tau_grid(algo: CpdAlgorithm) -> Vec<f64> {
    match algo {
        CpdAlgorithm::Slcd => (2..=10).map(f64::from).collect(),
        CpdAlgorithm::Cusum => logspace(0.1, 1000.0, 20),
        CpdAlgorithm::Kl => logspace(1e-3, 100.0, 20),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Generator template; its seed is replaced per realization.
    pub generator: CpdSynthSpec,
    pub algorithm: CpdAlgorithm,
    /// Arms evaluated on the same realizations.
    pub arms: Vec<Preprocessing>,
    /// Sweep values; `None` selects [`default_tau_grid`].
    #[serde(default)]
    pub tau: Option<Vec<f64>>,
    pub n_realizations: usize,
    pub seed: u64,
    /// SSA settings for the `ssa_max` arm; epochs follow the generator.
    #[serde(default)]
    pub ssa: SsaConfig,
}

impl ExperimentSpec {
    fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        if self.tau.as_ref().is_some_and(|t| t.is_empty()) {
            return Err(Error::InvalidArgument("empty tau sweep".into()));
        }
        if self.arms.is_empty() {
            return Err(Error::InvalidArgument("no experiment arms".into()));
        }
        let needs_dn = self.arms.iter().any(|a| *a != Preprocessing::None);
        if needs_dn && (self.generator.d_n == 0 || self.generator.d_n >= self.generator.dim) {
            return Err(Error::InvalidDimension(format!(
                "projection arms need 1 <= d_n < D, got d_n = {}",
                self.generator.d_n
            )));
        }
        Ok(())
    }

    pub fn taus(&self) -> Vec<f64> {
        self.tau.clone().unwrap_or_else(|| default_tau_grid(self.algorithm))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdResultRow {
    pub realization: usize,
    pub seed: u64,
    pub arm: Preprocessing,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpdExperimentResult {
    pub rows: Vec<CpdResultRow>,
    pub summary: Vec<(Preprocessing, Summary)>,
}

impl CpdExperimentResult {
    pub fn aucs(&self, arm: Preprocessing) -> Vec<f64> {
        self.rows.iter().filter(|r| r.arm == arm).map(|r| r.auc).collect()
    }

    pub fn summary_of(&self, arm: Preprocessing) -> Option<Summary> {
        self.summary.iter().find(|(a, _)| *a == arm).map(|(_, s)| *s)
    }
}

/// AUC of each arm on each realization. Realizations without any true
/// change point are regenerated under the next derived seed (recorded in the
/// row) so every row carries a defined AUC.
pub fn run_cpd_experiment(spec: &ExperimentSpec) -> Result<CpdExperimentResult> {
    spec.validate()?;
    let taus = spec.taus();
    let per_real: Vec<Result<Vec<CpdResultRow>>> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|r| cpd_realization(spec, &taus, r))
        .collect();
    let mut rows = Vec::new();
    for res in per_real {
        rows.extend(res?);
    }
    let summary = spec
        .arms
        .iter()
        .map(|&a| {
            let v: Vec<f64> = rows.iter().filter(|r| r.arm == a).map(|r| r.auc).collect();
            (a, Summary::of(&v))
        })
        .collect();
    Ok(CpdExperimentResult { rows, summary })
}

const MAX_REDRAWS: u64 = 1000;

fn cpd_realization(spec: &ExperimentSpec, taus: &[f64], r: usize) -> Result<Vec<CpdResultRow>> {
    let base = derive_seed(spec.seed, r as u64);
    let mut seed = base;
    let mut attempt = 0;
    let (ts, truth) = loop {
        let g = CpdSynthSpec {
            seed,
            ..spec.generator.clone()
        };
        let (ts, truth) = gen_cpd_dataset(&g)?;
        if !truth.boundaries.is_empty() {
            break (ts, truth);
        }
        attempt += 1;
        if attempt >= MAX_REDRAWS {
            return Err(Error::NoTrueBoundaries);
        }
        seed = derive_seed(base, attempt);
    };
    let gen = &spec.generator;
    let mut rows = Vec::with_capacity(spec.arms.len());
    for &arm in &spec.arms {
        let signal = match arm {
            Preprocessing::None => ts.clone(),
            Preprocessing::SsaMax => {
                let cfg = SsaConfig {
                    n_epochs: gen.n_epochs,
                    seed,
                    ..spec.ssa.clone()
                };
                find_most_nonstationary(&ts, gen.d_n, &cfg)?.sources(&ts)?
            }
            Preprocessing::RandomProjection => {
                let p = random_projection(gen.dim, gen.d_n, seed)?;
                ts.project(p.matrix())?
            }
        };
        let auc = sweep_auc(&signal, spec.algorithm, taus, gen, &truth.boundaries)?;
        rows.push(CpdResultRow {
            realization: r,
            seed,
            arm,
            auc,
        });
    }
    Ok(rows)
}

fn sweep_auc(
    ts: &TimeSeries,
    algo: CpdAlgorithm,
    taus: &[f64],
    gen: &CpdSynthSpec,
    truth: &[usize],
) -> Result<f64> {
    let n = gen.n_epochs;
    match algo {
        CpdAlgorithm::Slcd => {
            let dm = slcd_distance_matrix(ts, n)?;
            let det = taus
                .iter()
                .map(|&k| {
                    let k = k.round().clamp(1.0, n as f64) as usize;
                    Ok((k as f64, slcd_from_distances(&dm, k)?.boundaries))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(auc(&roc_from_sweep(&det, truth, n)?))
        }
        CpdAlgorithm::Kl => {
            let dm = kl_distance_matrix(ts, gen.epoch_len, Sigma::Auto)?;
            let scale = dm.median_off_diagonal();
            let det = taus
                .iter()
                .map(|&c| Ok((c, kohlmorgen_lemm_from_distances(&dm, c * scale)?.boundaries)))
                .collect::<Result<Vec<_>>>()?;
            Ok(auc(&roc_from_sweep(&det, truth, n)?))
        }
        CpdAlgorithm::Cusum => {
            // Univariate detector: score every channel, report the best.
            let mut best = f64::NEG_INFINITY;
            for c in 0..ts.dim() {
                let ch = ts.channel(c);
                let x = TimeSeries::new(DMatrix::from_row_slice(1, ch.len(), &ch))?;
                let m = ch.iter().sum::<f64>() / ch.len() as f64;
                let v = ch.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (ch.len() - 1) as f64;
                let grid = default_theta_grid(v);
                let det = taus
                    .iter()
                    .map(|&h| {
                        let p = CusumParams::new(gen.epoch_len, h, grid.clone())?;
                        Ok((h, cusum_weighted(&x, &p, gen.epoch_len)?.boundaries))
                    })
                    .collect::<Result<Vec<_>>>()?;
                best = best.max(auc(&roc_from_sweep(&det, truth, n)?));
            }
            Ok(best)
        }
    }
}

/// Classifier trained in a classification experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClassifMethod {
    Lda,
    /// Shrinkage LDA with the analytic intensity.
    Rlda,
    GradLda,
    Slda { alpha: f64 },
    /// sLDA with `α` chosen by cross-validation.
    SldaCv,
    RandLda { alpha: f64 },
}

impl ClassifMethod {
    pub fn label(&self) -> String {
        match self {
            ClassifMethod::Lda => "lda".into(),
            ClassifMethod::Rlda => "rlda".into(),
            ClassifMethod::GradLda => "gradlda".into(),
            ClassifMethod::Slda { alpha } => format!("slda({alpha})"),
            ClassifMethod::SldaCv => "slda_cv".into(),
            ClassifMethod::RandLda { alpha } => format!("randlda({alpha})"),
        }
    }

    pub fn train(&self, data: &TimeSeries, cfg: &TradeoffConfig) -> Result<LinearClassifier> {
        match *self {
            ClassifMethod::Lda => lda_train(&data.class_samples(1)?, &data.class_samples(2)?),
            ClassifMethod::Rlda => rlda_train(
                &data.class_samples(1)?,
                &data.class_samples(2)?,
                Shrinkage::Auto,
            ),
            ClassifMethod::GradLda => grad_lda_train(data, cfg),
            ClassifMethod::Slda { alpha } => slda_train(data, alpha, cfg),
            ClassifMethod::SldaCv => Ok(slda_cv_train(data, cfg)?.0),
            ClassifMethod::RandLda { alpha } => {
                rand_lda_train(data, alpha, derive_seed(cfg.seed, 1), cfg)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifExperimentSpec {
    pub variant: ClassifVariant,
    pub methods: Vec<ClassifMethod>,
    pub n_realizations: usize,
    pub seed: u64,
    /// Training settings; epochs follow the dataset and the seed follows
    /// the realization.
    #[serde(default)]
    pub tradeoff: TradeoffConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifResultRow {
    pub realization: usize,
    pub seed: u64,
    pub method: String,
    /// Test error rate, when the variant has a test set.
    pub error: Option<f64>,
    /// Angle (radians) between `w` and the true stationary discriminative
    /// direction, when the variant defines one.
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifExperimentResult {
    pub rows: Vec<ClassifResultRow>,
    /// Per method label: error and angle summaries.
    pub summary: Vec<(String, Option<Summary>, Option<Summary>)>,
}

impl ClassifExperimentResult {
    pub fn errors(&self, method: &ClassifMethod) -> Vec<f64> {
        let l = method.label();
        self.rows.iter().filter(|r| r.method == l).filter_map(|r| r.error).collect()
    }

    pub fn angles(&self, method: &ClassifMethod) -> Vec<f64> {
        let l = method.label();
        self.rows.iter().filter(|r| r.method == l).filter_map(|r| r.angle).collect()
    }
}

pub fn run_classif_experiment(spec: &ClassifExperimentSpec) -> Result<ClassifExperimentResult> {
    if spec.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods".into()));
    }
    let per_real: Vec<Result<Vec<ClassifResultRow>>> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|r| classif_realization(spec, r))
        .collect();
    let mut rows = Vec::new();
    for res in per_real {
        rows.extend(res?);
    }
    let summarize = |v: Vec<f64>| (!v.is_empty()).then(|| Summary::of(&v));
    let summary = spec
        .methods
        .iter()
        .map(|m| {
            let l = m.label();
            let mine = || rows.iter().filter(|r| r.method == l);
            (
                l.clone(),
                summarize(mine().filter_map(|r| r.error).collect()),
                summarize(mine().filter_map(|r| r.angle).collect()),
            )
        })
        .collect();
    Ok(ClassifExperimentResult { rows, summary })
}

fn classif_realization(spec: &ClassifExperimentSpec, r: usize) -> Result<Vec<ClassifResultRow>> {
    let seed = derive_seed(spec.seed, r as u64);
    let ds = gen_classif_dataset(&ClassifSynthSpec {
        variant: spec.variant.clone(),
        seed,
    })?;
    let cfg = TradeoffConfig {
        n_epochs: ds.n_epochs,
        seed,
        ..spec.tradeoff.clone()
    };
    spec.methods
        .iter()
        .map(|m| {
            let c = m.train(&ds.train, &cfg)?;
            let error = ds.test.as_ref().map(|t| c.error_rate(t)).transpose()?;
            let angle = ds
                .truth
                .discriminative_direction
                .as_ref()
                .map(|d| vector_angle(&c.w, d))
                .transpose()?;
            Ok(ClassifResultRow {
                realization: r,
                seed,
                method: m.label(),
                error,
                angle,
            })
        })
        .collect()
}
