//! Second-order expansion of the periodic conditional state in the
//! counter-rotating terms, keeping the `e^{±2iωt}` Fourier components.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::analytic::{cooperativity, steady_state_rwa};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::linalg::{max_abs, max_abs_complex, solve_lyapunov_kron, symmetrize, to_complex};
use crate::model::{build_homodyne_model, ModelMatrices, TwoModeParams};

/// Condition numbers above this make [`solve_sigma1`] fail.
pub const MAX_CONDITION: f64 = 1e12;

/// Which cross term between `σ₁` and the measurement matrices enters the
/// first-harmonic equation. For phase homodyne on a vacuum optical bath both
/// coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sigma1Form {
    /// `σ₁BN + NBᵀσ₁`.
    #[default]
    Printed,
    /// `σ₁BNᵀ + NBᵀσ₁`, the exact linearization of `(σB−N)(σB−N)ᵀ`.
    TransposeConsistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierCovariance {
    pub sigma0: CovarianceMatrix,
    /// Coefficient of `e^{iνt}`; the `e^{−iνt}` coefficient is its adjoint.
    pub sigma1: DMatrix<Complex64>,
    pub correction0: DMatrix<f64>,
    /// Modulation frequency `ν = 2ω`.
    pub nu: f64,
}

impl FourierCovariance {
    /// `σ₀ + correction + 2 Re[e^{iνt} σ₁]`.
    pub fn reconstruct(&self, t: f64) -> DMatrix<f64> {
        let phase = Complex64::from_polar(1.0, self.nu * t);
        let osc = self.sigma1.map(|z| 2.0 * (phase * z).re);
        self.sigma0.matrix() + &self.correction0 + osc
    }

    /// `2 Re[e^{iνt} σ₁]`.
    pub fn oscillating_part(&self, t: f64) -> DMatrix<f64> {
        let phase = Complex64::from_polar(1.0, self.nu * t);
        self.sigma1.map(|z| 2.0 * (phase * z).re)
    }
}

/// `(A₀, A₁)` with `A(t) = A₀ + A₁e^{iνt} + A₁^* e^{−iνt}`.
pub fn fourier_drift_components(model: &ModelMatrices) -> (DMatrix<f64>, DMatrix<Complex64>) {
    let parts = model.drift_parts();
    let a1 = DMatrix::from_fn(model.dim(), model.dim(), |i, j| {
        Complex64::new(parts.cos[(i, j)], -parts.sin[(i, j)]) * 0.5
    });
    (parts.constant.clone(), a1)
}

/// [`fourier_drift_components`] of the full two-mode model.
pub fn two_mode_fourier_components(
    p: &TwoModeParams,
) -> Result<(DMatrix<f64>, DMatrix<Complex64>)> {
    Ok(fourier_drift_components(&build_homodyne_model(p, false)?))
}

fn check_dims(sigma0: &CovarianceMatrix, model: &ModelMatrices) -> Result<()> {
    if sigma0.dim() != model.dim() {
        return Err(Error::invalid("sigma0 does not match the model dimension"));
    }
    if model.meas_b().ncols() != model.dim() {
        return Err(Error::invalid("expansion needs one measurement channel per quadrature"));
    }
    Ok(())
}

fn vec_c(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

/// First-harmonic component `σ₁` around the stationary state `σ₀`.
///
/// Solves `0 = −iνσ₁ + A₀σ₁ + σ₁A₀ᵀ + A₁σ₀ + σ₀A₁ᵀ − σ₀BBᵀσ₁ − σ₁BBᵀσ₀ + σ₁X + NBᵀσ₁`
/// with `X` chosen by `form`, as one dense linear system in `vec σ₁`.
pub fn solve_sigma1(
    sigma0: &CovarianceMatrix,
    model: &ModelMatrices,
    form: Sigma1Form,
) -> Result<DMatrix<Complex64>> {
    check_dims(sigma0, model)?;
    let n = model.dim();
    let (a0, a1) = fourier_drift_components(model);
    let s0 = sigma0.matrix();
    let (b, nn) = (model.meas_b(), model.meas_n());
    let g = b * b.transpose();
    let cross = match form {
        Sigma1Form::Printed => b * nn,
        Sigma1Form::TransposeConsistent => b * nn.transpose(),
    };
    let left = to_complex(&(&a0 - s0 * &g + nn * b.transpose()));
    let right = to_complex(&(a0.transpose() - &g * s0 + cross));

    let id = DMatrix::<Complex64>::identity(n, n);
    let shift = DMatrix::<Complex64>::identity(n * n, n * n) * Complex64::new(0.0, model.modulation_frequency());
    let op = id.kronecker(&left) + right.transpose().kronecker(&id) - shift;

    let s0c = to_complex(s0);
    let source = &a1 * &s0c + &s0c * a1.transpose();
    let rhs = -vec_c(&source);

    let sv = op.clone().singular_values();
    let smax = sv.iter().fold(0.0_f64, |a, &b| a.max(b));
    let smin = sv.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let cond = smax / smin;
    if !(cond < MAX_CONDITION) {
        return Err(Error::numerical(format!(
            "first-harmonic system is singular (condition number {cond:.3e})"
        )));
    }
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::numerical(format!("singular first-harmonic system (condition number {cond:.3e})")))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

/// Residual of the first-harmonic equation for a given `σ₁`.
pub fn sigma1_residual(
    sigma0: &CovarianceMatrix,
    sigma1: &DMatrix<Complex64>,
    model: &ModelMatrices,
    form: Sigma1Form,
) -> Result<DMatrix<Complex64>> {
    check_dims(sigma0, model)?;
    let (a0, a1) = fourier_drift_components(model);
    let a0 = to_complex(&a0);
    let s0 = to_complex(sigma0.matrix());
    let b = to_complex(model.meas_b());
    let nn = to_complex(model.meas_n());
    let g = &b * b.transpose();
    let cross = match form {
        Sigma1Form::Printed => &b * &nn,
        Sigma1Form::TransposeConsistent => &b * nn.transpose(),
    };
    let i_nu = Complex64::new(0.0, model.modulation_frequency());
    Ok(sigma1 * (-i_nu) + &a0 * sigma1 + sigma1 * a0.transpose() + &a1 * &s0 + &s0 * a1.transpose()
        - &s0 * &g * sigma1
        - sigma1 * &g * &s0
        + sigma1 * cross
        + &nn * b.transpose() * sigma1)
}

/// Stationary second-order term
/// `A₋₁σ₁ + σ₁A₋₁ᵀ + A₁σ₋₁ + σ₋₁A₁ᵀ − σ₋₁BBᵀσ₁ − σ₁BBᵀσ₋₁` with `σ₋₁ = σ₁†`,
/// `A₋₁ = A₁^*`.
pub fn second_order_correction(
    sigma0: &CovarianceMatrix,
    sigma1: &DMatrix<Complex64>,
    model: &ModelMatrices,
) -> Result<DMatrix<f64>> {
    check_dims(sigma0, model)?;
    let (_, a1) = fourier_drift_components(model);
    let am1 = a1.map(|z| z.conj());
    let sm1 = sigma1.adjoint();
    let b = to_complex(model.meas_b());
    let g = &b * b.transpose();
    let c = &am1 * sigma1 + sigma1 * am1.transpose() + &a1 * &sm1 + &sm1 * a1.transpose()
        - &sm1 * &g * sigma1
        - sigma1 * &g * &sm1;
    let re = c.map(|z| z.re);
    let im = max_abs(&c.map(|z| z.im));
    let scale = max_abs(&re).max(max_abs_complex(sigma1)).max(1.0);
    if im > 1e-9 * scale {
        return Err(Error::numerical(format!(
            "second-order correction has imaginary part {im:.3e}"
        )));
    }
    Ok(symmetrize(&re))
}

/// Shift `δ` of the stationary state produced by the second-order source `S`
/// through the linearized flow: `Pδ + δPᵀ + S = 0`, `P = A₀ − σ₀BBᵀ + NBᵀ`.
pub fn linearized_stationary_shift(
    sigma0: &CovarianceMatrix,
    source: &DMatrix<f64>,
    model: &ModelMatrices,
) -> Result<DMatrix<f64>> {
    check_dims(sigma0, model)?;
    let (a0, _) = fourier_drift_components(model);
    let b = model.meas_b();
    let p = &a0 - sigma0.matrix() * b * b.transpose() + model.meas_n() * b.transpose();
    Ok(symmetrize(&solve_lyapunov_kron(&p, source)?))
}

/// Full expansion of the two-mode model around its rotating-wave stationary state.
pub fn fourier_expansion(p: &TwoModeParams, form: Sigma1Form) -> Result<FourierCovariance> {
    let model = build_homodyne_model(p, false)?;
    let sigma0 = steady_state_rwa(p)?.cm;
    let sigma1 = solve_sigma1(&sigma0, &model, form)?;
    let correction0 = second_order_correction(&sigma0, &sigma1, &model)?;
    Ok(FourierCovariance {
        sigma0,
        sigma1,
        correction0,
        nu: model.modulation_frequency(),
    })
}

/// `χ_c(ω) = 1/(κ/2 − iω)`.
pub fn cavity_susceptibility(omega: f64, kappa: f64) -> Complex64 {
    Complex64::new(kappa / 2.0, -omega).inv()
}

fn sideband_factor(p: &TwoModeParams) -> f64 {
    let chi = cavity_susceptibility(2.0 * p.omega_m, p.kappa);
    p.kappa / (2.0 * p.omega_m) * chi.norm_sqr() * p.g * p.g / 2.0
}

/// Leading correction to `Var(X_m)`: `(κ/2ω)|χ_c(2ω)|² g²/2`.
pub fn xm_correction_closed_form(p: &TwoModeParams) -> f64 {
    sideband_factor(p)
}

/// Leading correction to `Var(P_m)`: `−η(κ/2ω)|χ_c(2ω)|² (g²/2)(C + 2n̄ + 1)²`.
pub fn pm_correction_closed_form(p: &TwoModeParams) -> Result<f64> {
    if !(p.kappa > 0.0 && p.gamma > 0.0) {
        return Err(Error::invalid("kappa and gamma must be positive"));
    }
    let s = cooperativity(p) + 2.0 * p.nbar + 1.0;
    Ok(-p.eta * sideband_factor(p) * s * s)
}
