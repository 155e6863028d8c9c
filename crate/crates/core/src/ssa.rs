//! Stationary subspace analysis: orthonormal projections that minimize (or
//! maximize) the epoch-wise divergence of the projected moments from the
//! standard normal.
//!
//! The optimizer works on a full `D x D` rotation `R` whose top `d` rows are
//! the projection. Each step multiplies `R` on the left by `exp(-ε H)` where
//! `H` is the antisymmetric part of the gradient coupling the projected and
//! complementary rows, so orthonormality is preserved exactly up to rounding.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_logdet, expm, orthonormality_error, random_orthogonal};
use crate::rng::{self, streams};
use crate::stats::{
    epoch_moments, partition_epochs, standardize_epochs, EpochStats, TimeSeries,
    WhiteningTransform,
};

const ARMIJO_SLOPE: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    Stationary,
    Nonstationary,
    Random,
}

/// `d x D` matrix with orthonormal rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    matrix: DMatrix<f64>,
    kind: ProjectionKind,
}

impl Projection {
    pub fn new(matrix: DMatrix<f64>, kind: ProjectionKind) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() > matrix.ncols() {
            return Err(Error::InvalidDimension(format!(
                "projection of shape {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let err = orthonormality_error(&matrix);
        if err > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "projection rows are not orthonormal (error {err:e})"
            )));
        }
        Ok(Self { matrix, kind })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.matrix.ncols()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsaConfig {
    pub n_epochs: usize,
    pub n_restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for SsaConfig {
    fn default() -> Self {
        Self {
            n_epochs: 10,
            n_restarts: 5,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            seed: 0,
        }
    }
}

impl SsaConfig {
    fn validate(&self) -> Result<()> {
        if self.n_restarts == 0 {
            return Err(Error::InvalidArgument("n_restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 || !(self.gradient_tolerance > 0.0) {
            return Err(Error::InvalidArgument(
                "max_iterations and gradient_tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of an SSA optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsaSolution {
    /// Projection in whitened coordinates.
    pub projection: Projection,
    /// Remaining rows of the optimized rotation (orthogonal complement).
    pub complement: DMatrix<f64>,
    /// Transform from raw observations to the coordinates the projection acts on.
    pub whitening: WhiteningTransform,
    pub loss: f64,
    pub per_restart_losses: Vec<f64>,
    pub iterations_used: usize,
    /// Worst `B B^T - I` deviation seen over every iterate of every restart.
    pub max_orthonormality_error: f64,
}

impl SsaSolution {
    /// Demixing matrix acting on raw (centered) observations: `B W`.
    pub fn demixing(&self) -> DMatrix<f64> {
        self.projection.matrix() * &self.whitening.matrix
    }

    /// Estimated sources for a raw time series.
    pub fn sources(&self, ts: &TimeSeries) -> Result<TimeSeries> {
        self.whitening.apply(ts)?.project(self.projection.matrix())
    }
}

/// `Σ_i (-log det(B Σ_i B^T) + |B μ_i|^2)`.
pub fn ssa_loss(b: &DMatrix<f64>, stats: &[EpochStats]) -> Result<f64> {
    check_shape(b, stats)?;
    let mut total = 0.0;
    for s in stats {
        let bs = b * &s.cov;
        let cov = &bs * b.transpose();
        let (_, logdet) = cholesky_logdet(&cov)?;
        let m = b * &s.mean;
        total += -logdet + m.norm_squared();
    }
    Ok(total)
}

/// Euclidean gradient of [`ssa_loss`] with respect to the entries of `B`:
/// `Σ_i (-2 (B Σ_i B^T)^{-1} B Σ_i + 2 B μ_i μ_i^T)`.
pub fn ssa_loss_gradient(b: &DMatrix<f64>, stats: &[EpochStats]) -> Result<DMatrix<f64>> {
    loss_and_gradient(b, stats).map(|(_, g)| g)
}

pub(crate) fn loss_and_gradient(
    b: &DMatrix<f64>,
    stats: &[EpochStats],
) -> Result<(f64, DMatrix<f64>)> {
    check_shape(b, stats)?;
    let mut total = 0.0;
    let mut grad = DMatrix::zeros(b.nrows(), b.ncols());
    for s in stats {
        let bs = b * &s.cov;
        let cov = &bs * b.transpose();
        let (chol, logdet) = cholesky_logdet(&cov)?;
        let m = b * &s.mean;
        total += -logdet + m.norm_squared();
        grad -= chol.solve(&bs) * 2.0;
        grad += (&m * s.mean.transpose()) * 2.0;
    }
    Ok((total, grad))
}

fn check_shape(b: &DMatrix<f64>, stats: &[EpochStats]) -> Result<()> {
    if stats.is_empty() {
        return Err(Error::InvalidArgument("no epochs".into()));
    }
    for s in stats {
        if s.dim() != b.ncols() {
            return Err(Error::DimensionMismatch {
                expected: b.ncols(),
                got: s.dim(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

impl Objective {
    fn sign(self) -> f64 {
        match self {
            Objective::Minimize => 1.0,
            Objective::Maximize => -1.0,
        }
    }

    fn kind(self) -> ProjectionKind {
        match self {
            Objective::Minimize => ProjectionKind::Stationary,
            Objective::Maximize => ProjectionKind::Nonstationary,
        }
    }
}

struct RestartOutcome {
    rotation: DMatrix<f64>,
    loss: f64,
    iterations: usize,
    max_orth_err: f64,
}

fn run_restart(
    stats: &[EpochStats],
    d: usize,
    objective: Objective,
    cfg: &SsaConfig,
    restart: usize,
) -> Result<RestartOutcome> {
    let dim = stats[0].dim();
    let mut rng = rng::stream(rng::derive_seed(cfg.seed, restart as u64), streams::RESTARTS);
    let mut rotation = random_orthogonal(dim, &mut rng);
    let sign = objective.sign();

    let eval = |r: &DMatrix<f64>| -> Result<f64> {
        let b = r.rows(0, d).into_owned();
        ssa_loss(&b, stats).map(|l| sign * l)
    };

    let mut max_orth_err = orthonormality_error(&rotation);
    let mut step = 1.0f64;
    let mut iterations = 0;
    let (mut f, mut grad) = {
        let b = rotation.rows(0, d).into_owned();
        let (l, g) = loss_and_gradient(&b, stats)?;
        (sign * l, g * sign)
    };

    while iterations < cfg.max_iterations {
        // Gradient in the Lie algebra, restricted to rotations that mix the
        // projected rows with the complement.
        let p = &grad * rotation.transpose();
        let mut h = DMatrix::zeros(dim, dim);
        for i in 0..d {
            for j in d..dim {
                h[(i, j)] = p[(i, j)];
                h[(j, i)] = -p[(i, j)];
            }
        }
        let gnorm = h.norm();
        if gnorm < cfg.gradient_tolerance {
            break;
        }
        let decrease = 0.5 * gnorm * gnorm;

        let mut trial = (2.0 * step).min(1.0);
        let mut accepted = None;
        while trial >= MIN_STEP {
            let candidate = expm(&(&h * -trial)) * &rotation;
            match eval(&candidate) {
                Ok(fc) if fc <= f - ARMIJO_SLOPE * trial * decrease => {
                    accepted = Some((candidate, fc));
                    break;
                }
                // A singular projected covariance counts as a failed trial.
                Ok(_) | Err(Error::SingularCovariance) => trial *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((candidate, fc)) = accepted else {
            break;
        };
        step = trial;
        rotation = candidate;
        f = fc;
        iterations += 1;
        max_orth_err = max_orth_err.max(orthonormality_error(&rotation.rows(0, d).into_owned()));
        let b = rotation.rows(0, d).into_owned();
        grad = loss_and_gradient(&b, stats)?.1 * sign;
    }

    Ok(RestartOutcome {
        rotation,
        loss: sign * f,
        iterations,
        max_orth_err,
    })
}

/// Optimizes a `d`-row projection on already standardized epoch moments.
/// `whitening` is carried into the solution unchanged.
pub fn optimize_projection(
    stats: &[EpochStats],
    d: usize,
    objective: Objective,
    cfg: &SsaConfig,
    whitening: WhiteningTransform,
) -> Result<SsaSolution> {
    cfg.validate()?;
    let dim = stats
        .first()
        .ok_or_else(|| Error::InvalidArgument("no epochs".into()))?
        .dim();
    if d == 0 || d >= dim {
        return Err(Error::InvalidDimension(format!(
            "projection dimension {d} must lie in 1..{dim}"
        )));
    }
    let outcomes: Vec<RestartOutcome> = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|r| run_restart(stats, d, objective, cfg, r))
        .collect::<Result<_>>()?;

    let sign = objective.sign();
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if sign * o.loss < sign * outcomes[best].loss - TIE_TOL {
            best = i;
        }
    }
    let per_restart_losses = outcomes.iter().map(|o| o.loss).collect();
    let iterations_used = outcomes.iter().map(|o| o.iterations).sum();
    let max_orthonormality_error = outcomes.iter().map(|o| o.max_orth_err).fold(0.0, f64::max);
    let winner = &outcomes[best];
    let projection = Projection::new(winner.rotation.rows(0, d).into_owned(), objective.kind())?;
    let complement = winner.rotation.rows(d, dim - d).into_owned();
    let loss = ssa_loss(projection.matrix(), stats)?;
    Ok(SsaSolution {
        projection,
        complement,
        whitening,
        loss,
        per_restart_losses,
        iterations_used,
        max_orthonormality_error,
    })
}

/// Epoch moments standardized so the average epoch is `N(0, I)`, plus the
/// transform that achieves it on raw observations.
pub fn standardized_epoch_stats(
    ts: &TimeSeries,
    n_epochs: usize,
) -> Result<(Vec<EpochStats>, WhiteningTransform)> {
    let part = partition_epochs(ts, n_epochs)?;
    let stats = epoch_moments(ts, &part)?;
    standardize_epochs(&stats)
}

fn solve(ts: &TimeSeries, d: usize, objective: Objective, cfg: &SsaConfig) -> Result<SsaSolution> {
    if d == 0 || d >= ts.dim() {
        return Err(Error::InvalidDimension(format!(
            "projection dimension {d} must lie in 1..{}",
            ts.dim()
        )));
    }
    let (stats, whitening) = standardized_epoch_stats(ts, cfg.n_epochs)?;
    optimize_projection(&stats, d, objective, cfg, whitening)
}

/// Projection to the `d_s` most stationary sources.
pub fn find_stationary(ts: &TimeSeries, d_s: usize, cfg: &SsaConfig) -> Result<SsaSolution> {
    solve(ts, d_s, Objective::Minimize, cfg)
}

/// Projection to the `d_n` most non-stationary sources (maximizes the loss).
pub fn find_most_nonstationary(
    ts: &TimeSeries,
    d_n: usize,
    cfg: &SsaConfig,
) -> Result<SsaSolution> {
    solve(ts, d_n, Objective::Maximize, cfg)
}

/// Uniformly distributed `d`-dimensional orthonormal projection of `R^D`.
pub fn random_projection(dim: usize, d: usize, seed: u64) -> Result<Projection> {
    if d == 0 || d > dim {
        return Err(Error::InvalidDimension(format!(
            "random projection of dimension {d} in R^{dim}"
        )));
    }
    let mut rng = rng::stream(seed, streams::PROJECTION);
    let q = random_orthogonal(dim, &mut rng);
    Projection::new(q.rows(0, d).into_owned(), ProjectionKind::Random)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn stat(mean: &[f64], cov: &[f64]) -> EpochStats {
        let d = mean.len();
        EpochStats {
            mean: DVector::from_row_slice(mean),
            cov: DMatrix::from_row_slice(d, d, cov),
            count: 100,
        }
    }

    #[test]
    fn loss_examples() {
        let b = DMatrix::identity(1, 1);
        assert_eq!(ssa_loss(&b, &[stat(&[0.0], &[1.0])]).unwrap(), 0.0);
        assert!((ssa_loss(&b, &[stat(&[0.5], &[1.0])]).unwrap() - 0.25).abs() < 1e-15);
        // Variances whose product is 1 contribute nothing to the log-det part.
        let l = ssa_loss(&b, &[stat(&[0.0], &[2.0]), stat(&[0.0], &[0.5])]).unwrap();
        assert!(l.abs() < 1e-15);
    }

    #[test]
    fn gradient_has_no_tangent_part_at_standardized_epochs() {
        // With identity covariances the Euclidean gradient is -2 N B, which is
        // normal to the manifold of orthonormal projections.
        let stats = vec![stat(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]); 3];
        let b = DMatrix::from_row_slice(1, 2, &[0.6, 0.8]);
        let g = ssa_loss_gradient(&b, &stats).unwrap();
        assert!((g + &b * 6.0).amax() < 1e-14);
    }

    #[test]
    fn invalid_dimensions() {
        let stats = vec![stat(&[0.0, 0.0], &[1.0, 0.0, 0.0, 1.0]); 2];
        let w = WhiteningTransform::identity(2);
        let cfg = SsaConfig::default();
        assert!(matches!(
            optimize_projection(&stats, 2, Objective::Minimize, &cfg, w.clone()),
            Err(Error::InvalidDimension(_))
        ));
        assert!(matches!(
            optimize_projection(&stats, 0, Objective::Maximize, &cfg, w),
            Err(Error::InvalidDimension(_))
        ));
        assert!(random_projection(3, 4, 0).is_err());
    }

    #[test]
    fn random_projection_deterministic() {
        let a = random_projection(5, 5, 9).unwrap();
        let b = random_projection(5, 5, 9).unwrap();
        assert_eq!(a, b);
        assert!(orthonormality_error(a.matrix()) < 1e-10);
    }
}
