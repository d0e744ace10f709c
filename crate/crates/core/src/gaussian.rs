//! Gaussian-state functionals on quadrature covariance matrices.
//!
//! Conventions: ħ = 1, vacuum variance 1/2, quadratures interleaved as
//! `(X₁, P₁, X₂, P₂, …)`. Symplectic spectra are taken from the eigenvalues of
//! `iΩσ`, which also works for partially transposed matrices.

use std::ops::Index;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::linalg::{self, asymmetry, max_abs, symmetrize};

/// Tolerance on `ν_min ≥ 1/2 − tol` used by the engine's physicality guards.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Largest accepted relative asymmetry before a matrix is rejected as a CM.
const ASYMMETRY_TOL: f64 = 1e-9;

/// Symmetric `2n × 2n` second-moment matrix of `n` bosonic modes.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    data: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps a matrix, symmetrizing away rounding-level asymmetry.
    ///
    /// Fails for non-square or odd-dimensional input, non-finite entries, or
    /// asymmetry that is clearly not rounding.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        let dim = data.nrows();
        if dim == 0 || dim != data.ncols() || dim % 2 != 0 {
            return Err(Error::invalid(format!(
                "covariance matrix must be square with even dimension, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("covariance matrix has non-finite entries"));
        }
        let scale = max_abs(&data).max(1.0);
        if asymmetry(&data) > ASYMMETRY_TOL * scale {
            return Err(Error::invalid("covariance matrix is not symmetric"));
        }
        Ok(Self {
            n_modes: dim / 2,
            data: symmetrize(&data),
        })
    }

    /// Builds from a matrix the caller knows to be symmetric up to rounding.
    pub(crate) fn from_symmetric(data: DMatrix<f64>) -> Self {
        Self {
            n_modes: data.nrows() / 2,
            data: symmetrize(&data),
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self::from_symmetric(DMatrix::from_diagonal_element(2 * n_modes, 2 * n_modes, 0.5))
    }

    /// Product of thermal states with the given occupations.
    pub fn thermal(occupations: &[f64]) -> Self {
        let diag: Vec<f64> = occupations
            .iter()
            .flat_map(|&n| [n + 0.5, n + 0.5])
            .collect();
        Self::from_symmetric(DMatrix::from_diagonal(&diag.into()))
    }

    /// Two-mode squeezed vacuum whose EPR combinations `X₁+X₂` and `P₁−P₂`
    /// are squeezed: `Var(X₊) = Var(P₋) = e^{-2r}/2`.
    pub fn two_mode_squeezed(r: f64) -> Self {
        let a = (2.0 * r).cosh() / 2.0;
        let c = (2.0 * r).sinh() / 2.0;
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            a,   0.0, -c,  0.0,
            0.0, a,   0.0, c,
            -c,  0.0, a,   0.0,
            0.0, c,   0.0, a,
        ]);
        Self::from_symmetric(m)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Variance of quadrature `k` (0-based in the interleaved ordering).
    pub fn variance(&self, k: usize) -> f64 {
        self.data[(k, k)]
    }

    /// Reduced state of the listed modes, in the listed order.
    pub fn reduced(&self, modes: &[usize]) -> Result<CovarianceMatrix> {
        if modes.is_empty() {
            return Err(Error::invalid("reduced state needs at least one mode"));
        }
        check_modes(modes, self.n_modes)?;
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let k = idx.len();
        let m = DMatrix::from_fn(k, k, |i, j| self.data[(idx[i], idx[j])]);
        Ok(Self::from_symmetric(m))
    }

    /// Entrywise mean of equally sized covariance matrices.
    pub fn mean(samples: &[CovarianceMatrix]) -> Result<CovarianceMatrix> {
        let first = samples
            .first()
            .ok_or_else(|| Error::invalid("mean of an empty sample set"))?;
        let mut acc = DMatrix::zeros(first.dim(), first.dim());
        for s in samples {
            if s.dim() != first.dim() {
                return Err(Error::invalid("mixed dimensions in sample set"));
            }
            acc += &s.data;
        }
        Ok(Self::from_symmetric(acc / samples.len() as f64))
    }

    /// Max-abs entrywise difference.
    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> f64 {
        max_abs(&(&self.data - &other.data))
    }
}

impl Index<(usize, usize)> for CovarianceMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.data[idx]
    }
}

/// Direct sum `⊕ⁿ ω` with `ω = [[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    data: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }
}

/// Single-mode symplectic form `ω`.
pub fn omega() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

pub fn symplectic_form(n_modes: usize) -> Result<SymplecticForm> {
    if n_modes == 0 {
        return Err(Error::invalid("symplectic form needs n_modes >= 1"));
    }
    let blocks = vec![omega(); n_modes];
    Ok(SymplecticForm {
        n_modes,
        data: linalg::direct_sum(&blocks),
    })
}

fn check_modes(modes: &[usize], n_modes: usize) -> Result<()> {
    match modes.iter().find(|&&m| m >= n_modes) {
        Some(m) => Err(Error::invalid(format!(
            "mode index {m} out of range for {n_modes} modes"
        ))),
        None => Ok(()),
    }
}

/// Applies a local symplectic map to every mode whose 2×2 block is positive
/// definite, bringing that block to `√det · I`. The symplectic spectrum is
/// unchanged, but the matrix norm drops by orders of magnitude for strongly
/// squeezed/anti-squeezed states, which keeps the eigensolver accurate.
fn balance_locally(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() / 2;
    let mut s = DMatrix::<f64>::identity(2 * n, 2 * n);
    for k in 0..n {
        let blk = Matrix2::new(
            m[(2 * k, 2 * k)],
            m[(2 * k, 2 * k + 1)],
            m[(2 * k + 1, 2 * k)],
            m[(2 * k + 1, 2 * k + 1)],
        );
        let det = blk.determinant();
        if !(blk[(0, 0)] > 0.0 && det > 0.0) {
            continue;
        }
        let eig = blk.symmetric_eigen();
        let inv_sqrt = eig.eigenvectors
            * Matrix2::from_diagonal(&eig.eigenvalues.map(|l| l.powf(-0.5)))
            * eig.eigenvectors.transpose();
        let local = inv_sqrt * det.powf(0.25);
        s.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&local);
    }
    &s * m * s.transpose()
}

/// Symplectic eigenvalues of a symmetric matrix, ascending.
///
/// Works for any symmetric input (including partial transposes); a raw matrix
/// that is not symmetric is rejected.
pub fn symplectic_eigenvalues_of(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    if dim == 0 || dim != m.ncols() || dim % 2 != 0 {
        return Err(Error::invalid("symplectic spectrum needs a square even-dimensional matrix"));
    }
    let scale = max_abs(m).max(1.0);
    if asymmetry(m) > ASYMMETRY_TOL * scale {
        return Err(Error::invalid("symplectic spectrum of a non-symmetric matrix"));
    }
    let balanced = balance_locally(&symmetrize(m));
    let form = symplectic_form(dim / 2)?;
    let ev = linalg::complex_eigenvalues(&(form.matrix() * balanced))?;
    let mut mags: Vec<f64> = ev.iter().map(|z| z.norm()).collect();
    mags.sort_by(f64::total_cmp);
    Ok(mags.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect())
}

pub fn symplectic_eigenvalues(sigma: &CovarianceMatrix) -> Result<Vec<f64>> {
    symplectic_eigenvalues_of(sigma.matrix())
}

pub fn min_symplectic_eigenvalue(sigma: &CovarianceMatrix) -> Result<f64> {
    Ok(symplectic_eigenvalues(sigma)?[0])
}

pub fn is_physical(sigma: &CovarianceMatrix, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(Error::invalid("tolerance must be non-negative"));
    }
    Ok(min_symplectic_eigenvalue(sigma)? >= 0.5 - tol)
}

/// `ΛσΛ`, with `Λ` flipping the sign of the momentum of each listed mode.
pub fn partial_transpose(sigma: &CovarianceMatrix, modes: &[usize]) -> Result<CovarianceMatrix> {
    check_modes(modes, sigma.n_modes())?;
    let mut out = sigma.matrix().clone();
    // set semantics: a repeated index is transposed once
    let mut unique: Vec<usize> = modes.to_vec();
    unique.sort_unstable();
    unique.dedup();
    for &m in &unique {
        let p = 2 * m + 1;
        out.row_mut(p).neg_mut();
        out.column_mut(p).neg_mut();
    }
    Ok(CovarianceMatrix::from_symmetric(out))
}

/// Logarithmic negativity (natural log) across the bipartition `partition | rest`.
pub fn log_negativity(sigma: &CovarianceMatrix, partition: &[usize]) -> Result<f64> {
    let nu = min_symplectic_eigenvalue(sigma)?;
    if nu < 0.5 - PHYSICALITY_TOL {
        return Err(Error::InvalidState(format!(
            "unphysical covariance matrix (min symplectic eigenvalue {nu:.6e})"
        )));
    }
    let pt = partial_transpose(sigma, partition)?;
    let nu_pt = min_symplectic_eigenvalue(&pt)?;
    Ok((-(2.0 * nu_pt).ln()).max(0.0))
}

/// `Var(X₊) + Var(P₋)` with `X₊ = (X_i + X_j)/√2`, `P₋ = (P_i − P_j)/√2`.
/// Values below 1 certify entanglement between modes `i` and `j`.
pub fn duan_sum(sigma: &CovarianceMatrix, i: usize, j: usize) -> Result<f64> {
    if sigma.n_modes() < 2 {
        return Err(Error::invalid("Duan sum needs at least two modes"));
    }
    if i == j {
        return Err(Error::invalid("Duan sum needs two distinct modes"));
    }
    check_modes(&[i, j], sigma.n_modes())?;
    let (xi, pi, xj, pj) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
    let var_xp = 0.5 * (sigma[(xi, xi)] + sigma[(xj, xj)] + 2.0 * sigma[(xi, xj)]);
    let var_pm = 0.5 * (sigma[(pi, pi)] + sigma[(pj, pj)] - 2.0 * sigma[(pi, pj)]);
    Ok(var_xp + var_pm)
}

/// `−10 log₁₀(2·variance)`: positive when squeezed below vacuum.
pub fn squeezing_db(variance: f64) -> Result<f64> {
    if !(variance > 0.0) {
        return Err(Error::invalid(format!("variance must be positive, got {variance}")));
    }
    Ok(-10.0 * (2.0 * variance).log10())
}

/// Two-mode squeezing in dB, `−10 log₁₀(duan_sum)`; 0 dB at the Duan bound.
pub fn two_mode_squeezing_db(duan: f64) -> Result<f64> {
    if !(duan > 0.0) {
        return Err(Error::invalid(format!("Duan sum must be positive, got {duan}")));
    }
    Ok(-10.0 * duan.log10())
}

/// `1 / (2ⁿ √det σ)`.
pub fn purity(sigma: &CovarianceMatrix) -> Result<f64> {
    let det = sigma.matrix().clone().lu().determinant();
    if !(det > 0.0) {
        return Err(Error::InvalidState(format!(
            "covariance determinant {det:.3e} is not positive"
        )));
    }
    Ok(1.0 / (2f64.powi(sigma.n_modes() as i32) * det.sqrt()))
}
