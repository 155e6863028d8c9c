//! Two-class linear classifiers: closed-form and shrinkage LDA, and the
//! gradient family (gradLDA, sLDA, randLDA) that trades the Fisher ratio
//! against a penalty.
//!
//! All classifiers share one decision rule: `x` is assigned to class 1 iff
//! `w^T x + b > 0`, with `w` pointing from class 2 towards class 1.

mod lda;
mod slda;

pub use lda::{fisher_ratio, lda_from_moments, lda_train, rlda_train};
pub use slda::{
    grad_lda_train, phi_ns, phi_ns_with, rand_lda_train, random_penalty, slda_cv_train,
    slda_gradient, slda_loss, slda_train, CvReport, PhiForm, TradeoffConfig,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{partition_len, sample_moments, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lda,
    Rlda,
    GradLda,
    Slda,
    RandLda,
}

/// How the bias is derived from the class means.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasConvention {
    /// `b = -w^T (μ1 + μ2) / 2`: the hyperplane passes through the midpoint.
    #[default]
    Midpoint,
    /// `b = -w^T (μ1 + μ2)`, without the halving.
    Sum,
}

impl BiasConvention {
    pub(crate) fn bias(self, w: &DVector<f64>, m1: &DVector<f64>, m2: &DVector<f64>) -> f64 {
        let s = w.dot(&(m1 + m2));
        match self {
            BiasConvention::Midpoint => -0.5 * s,
            BiasConvention::Sum => -s,
        }
    }
}

/// Hyperplane `w^T x + b = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub w: DVector<f64>,
    pub b: f64,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl LinearClassifier {
    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.b
    }

    /// Class label in `{1, 2}`.
    pub fn predict(&self, x: &[f64]) -> u8 {
        if self.decision(x) > 0.0 {
            1
        } else {
            2
        }
    }

    pub fn predict_series(&self, ts: &TimeSeries) -> Result<Vec<u8>> {
        if ts.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: ts.dim(),
            });
        }
        let scores = self.w.transpose() * ts.data();
        Ok(scores
            .iter()
            .map(|s| if s + self.b > 0.0 { 1 } else { 2 })
            .collect())
    }

    /// Fraction of misclassified labelled samples.
    pub fn error_rate(&self, ts: &TimeSeries) -> Result<f64> {
        let labels = ts
            .labels()
            .ok_or_else(|| Error::InvalidData("test series has no labels".into()))?;
        let pred = self.predict_series(ts)?;
        let wrong = pred.iter().zip(labels).filter(|(p, l)| p != l).count();
        Ok(wrong as f64 / labels.len() as f64)
    }

    /// Same decision rule with a unit-norm normal vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.w.norm();
        if !(n > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(Self {
            w: &self.w / n,
            b: self.b / n,
            ..self.clone()
        })
    }
}

/// Mean and covariance of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl ClassMoments {
    pub fn from_samples(x: &DMatrix<f64>) -> Result<Self> {
        let (mean, cov) = sample_moments(x)?;
        Ok(Self { mean, cov })
    }
}

/// Per-epoch and pooled moments of both classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEpochStats {
    /// `epochs[i][j]`: class `j + 1` on epoch `i`.
    pub epochs: Vec<[ClassMoments; 2]>,
    pub pooled: [ClassMoments; 2],
}

impl ClassEpochStats {
    /// Splits a labelled series into `n_epochs` contiguous equal blocks and
    /// estimates class moments within each block and over the whole series.
    pub fn from_series(ts: &TimeSeries, n_epochs: usize) -> Result<Self> {
        let labels = ts
            .labels()
            .ok_or_else(|| Error::InvalidData("training series has no labels".into()))?;
        // Epoch size is constrained per class below, not by the dimension.
        let part = partition_len(ts.len(), 0, n_epochs)?;
        let mut epochs = Vec::with_capacity(n_epochs);
        for r in part.ranges() {
            let moments = [1u8, 2].map(|c| {
                let idx: Vec<usize> = r.clone().filter(|&i| labels[i] == c).collect();
                if idx.len() < 2 {
                    return Err(Error::TooFewSamples(format!(
                        "epoch {r:?} has {} samples of class {c}",
                        idx.len()
                    )));
                }
                ClassMoments::from_samples(&ts.data().select_columns(idx.iter()))
            });
            let [a, b] = moments;
            epochs.push([a?, b?]);
        }
        let [p1, p2] = [1u8, 2].map(|c| {
            let x = ts.class_samples(c)?;
            ClassMoments::from_samples(&x)
        });
        Ok(Self {
            epochs,
            pooled: [p1?, p2?],
        })
    }

    pub fn dim(&self) -> usize {
        self.pooled[0].mean.len()
    }

    pub fn n_epochs(&self) -> usize {
        self.epochs.len()
    }

    pub(crate) fn mean_diff(&self) -> DVector<f64> {
        &self.pooled[0].mean - &self.pooled[1].mean
    }

    pub(crate) fn within_scatter(&self) -> DMatrix<f64> {
        &self.pooled[0].cov + &self.pooled[1].cov
    }
}
