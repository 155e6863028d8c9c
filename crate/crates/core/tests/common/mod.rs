#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nonstat::rng;
use nonstat::TimeSeries;
use rand::Rng;
use rand_distr::StandardNormal;

pub type Gen = rng::StreamRng;

pub fn gen(seed: u64) -> Gen {
    rng::stream(seed, 900)
}

pub fn gaussian_matrix(g: &mut Gen, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| g.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vector(g: &mut Gen, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| g.sample::<f64, _>(StandardNormal))
}

/// Well-conditioned random SPD matrix.
pub fn spd(g: &mut Gen, d: usize) -> DMatrix<f64> {
    let a = gaussian_matrix(g, d, d);
    &a * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.5
}

/// Orthogonal `d x d` matrix with rotation angle `angle` in 2-D.
pub fn rotation2(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Epoch-wise Gaussian series: `n_epochs` blocks of `len` samples, epoch
/// `i` drawn as `mean_i + chol(cov_i) z`.
pub fn epoch_series(g: &mut Gen, blocks: &[(DVector<f64>, DMatrix<f64>)], len: usize) -> TimeSeries {
    let d = blocks[0].0.len();
    let mut data = DMatrix::zeros(d, blocks.len() * len);
    for (i, (m, c)) in blocks.iter().enumerate() {
        let l = c.clone().cholesky().expect("spd").l();
        for t in 0..len {
            let z = gaussian_vector(g, d);
            data.set_column(i * len + t, &(m + &l * z));
        }
    }
    TimeSeries::new(data).unwrap()
}

/// Relative discrepancy `|a - b| / max(|a|, |b|, floor)`.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub mod suite;
