//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a symmetric matrix counts as singular.
pub const SINGULAR_RTOL: f64 = 1e-12;

/// Symmetrize in place: `m <- (m + m^T) / 2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Cholesky factor plus `log det`, failing on non-SPD input.
pub fn cholesky_logdet(m: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let chol = Cholesky::new(m.clone()).ok_or(Error::SingularCovariance)?;
    let l = chol.l_dirty();
    let mut logdet = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularCovariance);
        }
        logdet += 2.0 * d.ln();
    }
    Ok((chol, logdet))
}

/// `log det` of a symmetric positive-definite matrix.
pub fn logdet_spd(m: &DMatrix<f64>) -> Result<f64> {
    cholesky_logdet(m).map(|(_, ld)| ld)
}

/// Eigendecomposition with the singular-floor check applied.
fn checked_eigen(m: &DMatrix<f64>) -> Result<SymmetricEigen<f64, Dyn>> {
    let mut s = m.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::SingularCovariance);
    }
    if eig.eigenvalues.iter().any(|&l| l <= SINGULAR_RTOL * max) {
        return Err(Error::SingularCovariance);
    }
    Ok(eig)
}

/// Symmetric inverse square root `m^{-1/2}`.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = checked_eigen(m)?;
    let scaled = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| 1.0 / l.sqrt()),
    );
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&scaled) * v.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// Checks symmetric positive definiteness with the same floor used by [`inv_sqrt_spd`].
pub fn check_spd(m: &DMatrix<f64>) -> Result<()> {
    checked_eigen(m).map(|_| ())
}

/// Matrix exponential of a (skew-symmetric) square matrix by scaling and
/// squaring with a diagonal Padé approximant of order 6.
pub fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let n = x.nrows();
    let norm = x.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let a = x / 2f64.powi(squarings as i32);

    let ident = DMatrix::<f64>::identity(n, n);
    let mut num = ident.clone() * C[0];
    let mut den = ident.clone() * C[0];
    let mut power = ident;
    for (k, c) in C.iter().enumerate().skip(1) {
        power = &power * &a;
        num += &power * *c;
        if k % 2 == 0 {
            den += &power * *c;
        } else {
            den -= &power * *c;
        }
    }
    let mut r = den
        .lu()
        .solve(&num)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Largest absolute entry of `B B^T - I`.
pub fn orthonormality_error(b: &DMatrix<f64>) -> f64 {
    let g = b * b.transpose();
    let mut err: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((g[(i, j)] - target).abs());
        }
    }
    err
}

/// Orthonormal basis (as columns) for the span of the columns of `m`.
pub fn orthonormal_columns(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.ncols();
    if k == 0 || m.nrows() < k {
        return Err(Error::InvalidDimension(format!(
            "cannot orthonormalize {} columns in dimension {}",
            k,
            m.nrows()
        )));
    }
    let scale = m.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::ZeroVector);
    }
    let qr = m.clone().qr();
    let r = qr.r();
    for i in 0..k {
        if r[(i, i)].abs() <= 1e-12 * scale {
            return Err(Error::ZeroVector);
        }
    }
    Ok(qr.q().columns(0, k).into_owned())
}

/// Sum of squared entries of `a ∘ b`, i.e. the Frobenius inner product.
pub fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn expm_of_skew_is_rotation() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, -0.7, 0.7, 0.0]);
        let r = expm(&x);
        assert!((r[(0, 0)] - 0.7f64.cos()).abs() < 1e-14);
        assert!((r[(1, 0)] - 0.7f64.sin()).abs() < 1e-14);
        let big = x * 40.0;
        let r = expm(&big);
        assert!(orthonormality_error(&r) < 1e-12);
        assert!((r[(0, 0)] - 28f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn expm_zero_is_identity() {
        let r = expm(&DMatrix::zeros(4, 4));
        assert_eq!(r, DMatrix::identity(4, 4));
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for d in 1..8 {
            let q = random_orthogonal(d, &mut rng);
            assert!(orthonormality_error(&q) < 1e-12);
        }
    }

    #[test]
    fn inv_sqrt_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 4.0]));
        let w = inv_sqrt_spd(&m).unwrap();
        assert!((w[(0, 0)] - 1.0 / 3.0).abs() < 1e-14);
        assert!((w[(1, 1)] - 0.5).abs() < 1e-14);
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(inv_sqrt_spd(&singular).is_err());
    }
}
