//! Small dense linear-algebra helpers shared by the physics modules.

use nalgebra::{linalg::Schur, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_complex(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest |m_ij - m_ji|.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// `M^{-1/2}` for a symmetric positive-definite matrix, via its eigendecomposition.
pub fn inv_sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|&l| !(l > 1e-300 && l > 1e-15 * scale)) {
        return Err(Error::numerical(
            "matrix is not positive definite; inverse square root undefined",
        ));
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(-0.5)));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Eigenvalues of a general real square matrix.
pub fn complex_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite matrix entry"));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::numerical("eigenvalue iteration did not converge"))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    Ok(complex_eigenvalues(m)?
        .iter()
        .fold(f64::NEG_INFINITY, |a, z| a.max(z.re)))
}

/// Solves `A X + X Aᵀ + Q = 0` through the Kronecker form
/// `(I ⊗ A + A ⊗ I) vec X = -vec Q`. No stability check is done here.
pub fn solve_lyapunov_kron(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let op = id.kronecker(a) + a.kronecker(&id);
    let rhs = -DVector::from_column_slice(q.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("singular Lyapunov operator"))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Upper-triangular index pairs `(i, j)` with `i <= j`, row-major.
pub fn upper_indices(dim: usize) -> Vec<(usize, usize)> {
    (0..dim)
        .flat_map(|i| (i..dim).map(move |j| (i, j)))
        .collect()
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Block-diagonal direct sum of square blocks.
pub fn direct_sum(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(dim, dim);
    let mut off = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((off, off), (k, k)).copy_from(b);
        off += k;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_balance() {
        let a = DMatrix::from_diagonal_element(2, 2, -0.05);
        let q = DMatrix::from_diagonal_element(2, 2, 0.05);
        let x = solve_lyapunov_kron(&a, &q).unwrap();
        assert!((x[(0, 0)] - 0.5).abs() < 1e-14);
        assert!(x[(0, 1)].abs() < 1e-14);
    }

    #[test]
    fn inv_sqrt_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 0.25]));
        let r = inv_sqrt_spd(&m).unwrap();
        assert!((r[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((r[(1, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        assert!(matches!(inv_sqrt_spd(&m), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn upper_index_count() {
        assert_eq!(upper_indices(4).len(), 10);
        assert_eq!(upper_indices(6).len(), 21);
    }
}
