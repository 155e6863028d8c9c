//! Closed-form LDA, its shrinkage variant, and the Fisher ratio.

use nalgebra::{DMatrix, DVector};

use super::{BiasConvention, ClassEpochStats, LinearClassifier, Method};
use crate::error::{Error, Result};
use crate::linalg::cholesky_logdet;
use crate::stats::{sample_moments, shrinkage_cov, Shrinkage};

/// LDA from class moments: `w = (Σ1 + Σ2)^{-1} (μ1 - μ2)`.
pub fn lda_from_moments(
    m1: &DVector<f64>,
    s1: &DMatrix<f64>,
    m2: &DVector<f64>,
    s2: &DMatrix<f64>,
    bias: BiasConvention,
) -> Result<LinearClassifier> {
    if m1.len() != m2.len() {
        return Err(Error::DimensionMismatch {
            expected: m1.len(),
            got: m2.len(),
        });
    }
    let diff = m1 - m2;
    let scale = m1.amax().max(m2.amax()).max(1.0);
    if diff.amax() <= 1e-14 * scale {
        return Err(Error::DegenerateSeparation);
    }
    let (chol, _) = cholesky_logdet(&(s1 + s2))?;
    let w = chol.solve(&diff);
    let b = bias.bias(&w, m1, m2);
    Ok(LinearClassifier {
        w,
        b,
        method: Method::Lda,
        alpha: None,
    })
}

/// LDA on samples given as columns.
pub fn lda_train(class1: &DMatrix<f64>, class2: &DMatrix<f64>) -> Result<LinearClassifier> {
    let (m1, s1) = sample_moments(class1)?;
    let (m2, s2) = sample_moments(class2)?;
    lda_from_moments(&m1, &s1, &m2, &s2, BiasConvention::default())
}

/// LDA with each class covariance shrunk towards a scaled identity.
pub fn rlda_train(
    class1: &DMatrix<f64>,
    class2: &DMatrix<f64>,
    gamma: Shrinkage,
) -> Result<LinearClassifier> {
    let (m1, _) = sample_moments(class1)?;
    let (m2, _) = sample_moments(class2)?;
    let s1 = shrinkage_cov(class1, gamma)?;
    let s2 = shrinkage_cov(class2, gamma)?;
    let mut c = lda_from_moments(&m1, &s1, &m2, &s2, BiasConvention::default())?;
    c.method = Method::Rlda;
    Ok(c)
}

/// `(w^T (μ1 - μ2))^2 / w^T (Σ1 + Σ2) w` on the pooled class moments.
pub fn fisher_ratio(w: &DVector<f64>, stats: &ClassEpochStats) -> Result<f64> {
    if w.len() != stats.dim() {
        return Err(Error::DimensionMismatch {
            expected: stats.dim(),
            got: w.len(),
        });
    }
    if w.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let a = w.dot(&stats.mean_diff());
    let s = w.dot(&(stats.within_scatter() * w));
    if !(s > 0.0) {
        return Err(Error::DegenerateVariance(s));
    }
    Ok(a * a / s)
}
