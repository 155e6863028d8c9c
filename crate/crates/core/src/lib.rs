//! Toolkit for analysing non-stationary multivariate time series: stationary
//! subspace analysis, tests for the number of stationary sources, change-point
//! detection in projected subspaces and non-stationarity aware linear
//! classifiers, together with synthetic benchmarks and their evaluation.

pub mod classify;
pub mod cpd;
pub mod error;
pub mod io;
pub mod eval;
pub mod linalg;
pub mod lrtest;
pub mod rng;
pub mod special;
pub mod ssa;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use ssa::{
    find_most_nonstationary, find_stationary, random_projection, ssa_loss, ssa_loss_gradient,
    Projection, ProjectionKind, SsaConfig, SsaSolution,
};
pub use stats::{
    epoch_moments, partition_epochs, EpochPartition, EpochStats, GaussianParams, TimeSeries,
    WhiteningTransform,
};
