use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::orthonormal_columns;
use crate::special::ln_gamma;

/// First principal angle between the column spans of `u` and `v`, in
/// `[0, π/2]`.
pub fn subspace_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    if u.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            got: v.nrows(),
        });
    }
    let qu = orthonormal_columns(u)?;
    let qv = orthonormal_columns(v)?;
    let m = qu.transpose() * &qv;
    let svd = m.svd(true, true);
    let (mut best, mut s_max) = (0, f64::NEG_INFINITY);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > s_max {
            best = i;
            s_max = s;
        }
    }
    let y = svd.u.as_ref().expect("requested").column(best).into_owned();
    let z = svd.v_t.as_ref().expect("requested").row(best).transpose();
    // Principal vectors; the half-angle form stays accurate near 0 and π/2.
    let a = &qu * y;
    let b = &qv * z;
    Ok(2.0 * (&a - &b).norm().atan2((&a + &b).norm()))
}

/// Angle between the lines spanned by two vectors.
pub fn vector_angle(u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    subspace_angle(
        &DMatrix::from_column_slice(u.len(), 1, u.as_slice()),
        &DMatrix::from_column_slice(v.len(), 1, v.as_slice()),
    )
}

/// Density `sin^{D-2}(θ) / Z` of the angle between a fixed line and a
/// uniformly random line in `R^D`.
pub fn random_angle_density(theta: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::DomainError(format!("dimension {dim} < 2")));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::DomainError(format!("angle {theta} outside [0, π/2]")));
    }
    let n = (dim - 2) as f64;
    // ∫_0^{π/2} sin^n = √π Γ((n+1)/2) / (2 Γ(n/2 + 1))
    let ln_z = 0.5 * std::f64::consts::PI.ln() + ln_gamma((n + 1.0) / 2.0)
        - std::f64::consts::LN_2
        - ln_gamma(n / 2.0 + 1.0);
    if n == 0.0 {
        return Ok((-ln_z).exp());
    }
    Ok(theta.sin().powf(n) * (-ln_z).exp())
}
