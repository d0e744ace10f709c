//! Drift, diffusion and measurement matrices for the linearized two-tone
//! optomechanical systems.
//!
//! Quadrature ordering is `(X_c, P_c, X_m, P_m)` for one mechanical mode and
//! `(X_c, P_c, X_m1, P_m1, X_m2, P_m2)` for two. All rates share the unit of
//! the reference frequency (`omega_m` or `omega`); with that frequency set to 1
//! every rate is a ratio to it, which is how configuration files express them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::omega;
use crate::linalg::{self, direct_sum, inv_sqrt_spd};

/// Default squeezing-limit parameter of the homodyne projector.
pub const DEFAULT_HOMODYNE_R: f64 = 1e-8;

/// One cavity mode coupled to one mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoModeParams {
    pub omega_m: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub nbar: f64,
    pub eta: f64,
}

impl Default for TwoModeParams {
    fn default() -> Self {
        Self {
            omega_m: 1.0,
            g: 0.05,
            kappa: 0.1,
            gamma: 1e-4,
            nbar: 10.0,
            eta: 1.0,
        }
    }
}

impl TwoModeParams {
    /// Parameters in units of `ω_m`.
    pub fn new(g: f64, kappa: f64, gamma: f64, nbar: f64, eta: f64) -> Self {
        Self {
            omega_m: 1.0,
            g,
            kappa,
            gamma,
            nbar,
            eta,
        }
    }
}

/// One cavity mode coupled to two mechanical modes with equal couplings,
/// damping and bath occupancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeModeParams {
    /// Mean mechanical frequency.
    pub omega: f64,
    /// Half the mechanical frequency difference.
    pub omega_split: f64,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub nbar: f64,
    pub eta: f64,
}

impl Default for ThreeModeParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega_split: 0.1,
            g: 0.3,
            kappa: 0.3,
            gamma: 1e-4,
            nbar: 10.0,
            eta: 1.0,
        }
    }
}

impl ThreeModeParams {
    /// Parameters in units of `ω`.
    pub fn new(omega_split: f64, g: f64, kappa: f64, gamma: f64, nbar: f64, eta: f64) -> Self {
        Self {
            omega: 1.0,
            omega_split,
            g,
            kappa,
            gamma,
            nbar,
            eta,
        }
    }
}

/// Time-independent, cosine and sine parts of `A(t) = A₀ + cos(νt)·A_c + sin(νt)·A_s`
/// with `ν` the modulation frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftParts {
    pub constant: DMatrix<f64>,
    pub cos: DMatrix<f64>,
    pub sin: DMatrix<f64>,
}

/// Common view over the two parameter sets.
pub trait SystemParams {
    fn n_modes(&self) -> usize;
    /// Reference frequency (`ω_m` or `ω`); the drive modulates at twice this.
    fn frequency(&self) -> f64;
    fn coupling(&self) -> f64;
    fn kappa(&self) -> f64;
    fn gamma(&self) -> f64;
    fn nbar(&self) -> f64;
    fn eta(&self) -> f64;
    fn drift_parts(&self) -> DriftParts;

    fn validate(&self) -> Result<()> {
        validate_common(self)
    }
}

fn validate_common<P: SystemParams + ?Sized>(p: &P) -> Result<()> {
    let check = |ok: bool, key: &str, msg: &str| {
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{key}: {msg}")))
        }
    };
    check(p.frequency() > 0.0 && p.frequency().is_finite(), "omega", "must be positive")?;
    check(p.coupling() >= 0.0 && p.coupling().is_finite(), "g", "must be non-negative")?;
    check(p.kappa() > 0.0 && p.kappa().is_finite(), "kappa", "must be positive")?;
    check(p.gamma() >= 0.0, "gamma", "must be non-negative")?;
    check(p.gamma() < p.frequency(), "gamma", "weak damping requires gamma < omega")?;
    check(p.nbar() >= 0.0 && p.nbar().is_finite(), "nbar", "must be non-negative")?;
    check((0.0..=1.0).contains(&p.eta()), "eta", "must lie in [0, 1]")?;
    Ok(())
}

impl SystemParams for TwoModeParams {
    fn n_modes(&self) -> usize {
        2
    }
    fn frequency(&self) -> f64 {
        self.omega_m
    }
    fn coupling(&self) -> f64 {
        self.g
    }
    fn kappa(&self) -> f64 {
        self.kappa
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
    fn nbar(&self) -> f64 {
        self.nbar
    }
    fn eta(&self) -> f64 {
        self.eta
    }

    fn drift_parts(&self) -> DriftParts {
        let g = self.g;
        let mut constant = DMatrix::from_diagonal(
            &vec![-self.kappa / 2.0, -self.kappa / 2.0, -self.gamma / 2.0, -self.gamma / 2.0]
                .into(),
        );
        constant[(1, 2)] = g;
        constant[(3, 0)] = g;
        let mut cos = DMatrix::zeros(4, 4);
        cos[(1, 2)] = g;
        cos[(3, 0)] = g;
        let mut sin = DMatrix::zeros(4, 4);
        sin[(1, 3)] = g;
        sin[(2, 0)] = -g;
        DriftParts { constant, cos, sin }
    }
}

impl SystemParams for ThreeModeParams {
    fn n_modes(&self) -> usize {
        3
    }
    fn frequency(&self) -> f64 {
        self.omega
    }
    fn coupling(&self) -> f64 {
        self.g
    }
    fn kappa(&self) -> f64 {
        self.kappa
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
    fn nbar(&self) -> f64 {
        self.nbar
    }
    fn eta(&self) -> f64 {
        self.eta
    }

    fn drift_parts(&self) -> DriftParts {
        let (g, split) = (self.g, self.omega_split);
        let h = -self.gamma / 2.0;
        let mut constant = DMatrix::from_diagonal(
            &vec![-self.kappa / 2.0, -self.kappa / 2.0, h, h, h, h].into(),
        );
        let mut cos = DMatrix::zeros(6, 6);
        let mut sin = DMatrix::zeros(6, 6);
        for x in [2, 4] {
            constant[(1, x)] = g;
            constant[(x + 1, 0)] = g;
            cos[(1, x)] = g;
            cos[(x + 1, 0)] = g;
            sin[(1, x + 1)] = g;
            sin[(x, 0)] = -g;
        }
        // opposite internal rotations of the two mechanical modes
        constant[(2, 3)] = split;
        constant[(3, 2)] = -split;
        constant[(4, 5)] = -split;
        constant[(5, 4)] = split;
        DriftParts { constant, cos, sin }
    }

    fn validate(&self) -> Result<()> {
        validate_common(self)?;
        if !(self.omega_split >= 0.0 && self.omega_split < self.omega) {
            return Err(Error::invalid("omega_split: must satisfy 0 <= omega_split < omega"));
        }
        Ok(())
    }
}

/// General-dyne projection of the optical output channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSpec {
    /// Squeezing parameter of the projector; `r → 0` is ideal homodyne.
    pub r: f64,
    /// Homodyne angle; `π/2` selects the optical phase quadrature.
    pub theta: f64,
    pub eta_optical: f64,
}

impl Default for MeasurementSpec {
    fn default() -> Self {
        Self {
            r: DEFAULT_HOMODYNE_R,
            theta: FRAC_PI_2,
            eta_optical: 1.0,
        }
    }
}

impl MeasurementSpec {
    /// Phase-quadrature homodyne with efficiency `eta`.
    pub fn homodyne(eta: f64) -> Self {
        Self {
            eta_optical: eta,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::invalid("r: must be positive"));
        }
        if !(0.0..TAU).contains(&self.theta) {
            return Err(Error::invalid("theta: must lie in [0, 2π)"));
        }
        if !(0.0..=1.0).contains(&self.eta_optical) {
            return Err(Error::invalid("eta_optical: must lie in [0, 1]"));
        }
        Ok(())
    }

    /// `σ_meas = ½ R_θ diag(r, 1/r) R_θᵀ`.
    pub fn projector_covariance(&self) -> DMatrix<f64> {
        let (s, c) = self.theta.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let d = DMatrix::from_diagonal(&vec![self.r, 1.0 / self.r].into());
        &rot * d * rot.transpose() * 0.5
    }
}

/// `A(t)`, `D`, `B`, `N` of one conditional evolution problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrices {
    n_modes: usize,
    drift: DriftParts,
    modulation_frequency: f64,
    diffusion: DMatrix<f64>,
    bath: DMatrix<f64>,
    meas_b: DMatrix<f64>,
    meas_n: DMatrix<f64>,
    period: f64,
    rwa: bool,
}

impl ModelMatrices {
    /// Assembles a model from raw parts. `modulation_frequency` is the angular
    /// frequency of the cos/sin drift terms; the period is `2π/modulation_frequency`.
    /// `bath` is the uncoupled thermal state, used as the default initial condition.
    pub fn from_parts(
        drift: DriftParts,
        modulation_frequency: f64,
        diffusion: DMatrix<f64>,
        bath: DMatrix<f64>,
        meas_b: DMatrix<f64>,
        meas_n: DMatrix<f64>,
        rwa: bool,
    ) -> Result<Self> {
        let dim = drift.constant.nrows();
        let square = |m: &DMatrix<f64>| m.nrows() == dim && m.ncols() == dim;
        if dim == 0 || dim % 2 != 0 || !square(&drift.constant) {
            return Err(Error::invalid("drift must be square with even dimension"));
        }
        if !square(&drift.cos) || !square(&drift.sin) || !square(&diffusion) || !square(&bath) {
            return Err(Error::invalid("drift/diffusion dimensions disagree"));
        }
        if meas_b.nrows() != dim || meas_n.shape() != meas_b.shape() {
            return Err(Error::invalid("measurement matrices have inconsistent shapes"));
        }
        if !(modulation_frequency > 0.0) {
            return Err(Error::invalid("modulation frequency must be positive"));
        }
        if linalg::asymmetry(&diffusion) > 1e-14 * linalg::max_abs(&diffusion).max(1.0)
            || linalg::min_eigenvalue_sym(&diffusion) < -1e-14 * linalg::max_abs(&diffusion)
        {
            return Err(Error::invalid("diffusion must be symmetric positive semidefinite"));
        }
        let drift = if rwa {
            DriftParts {
                cos: DMatrix::zeros(dim, dim),
                sin: DMatrix::zeros(dim, dim),
                ..drift
            }
        } else {
            drift
        };
        Ok(Self {
            n_modes: dim / 2,
            drift,
            modulation_frequency,
            diffusion,
            bath,
            meas_b,
            meas_n,
            period: TAU / modulation_frequency,
            rwa,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    /// `A(t)`.
    pub fn drift(&self, t: f64) -> DMatrix<f64> {
        if self.rwa {
            return self.drift.constant.clone();
        }
        let (s, c) = (self.modulation_frequency * t).sin_cos();
        &self.drift.constant + &self.drift.cos * c + &self.drift.sin * s
    }

    pub fn drift_parts(&self) -> &DriftParts {
        &self.drift
    }

    pub fn modulation_frequency(&self) -> f64 {
        self.modulation_frequency
    }

    pub fn diffusion(&self) -> &DMatrix<f64> {
        &self.diffusion
    }

    /// Thermal product state of the uncoupled modes.
    pub fn bath_covariance(&self) -> &DMatrix<f64> {
        &self.bath
    }

    pub fn meas_b(&self) -> &DMatrix<f64> {
        &self.meas_b
    }

    pub fn meas_n(&self) -> &DMatrix<f64> {
        &self.meas_n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_rwa(&self) -> bool {
        self.rwa
    }

    /// Indices of measurement channels with a non-zero column in `B` or `N`.
    pub fn monitored_channels(&self) -> Vec<usize> {
        (0..self.meas_b.ncols())
            .filter(|&c| {
                self.meas_b.column(c).iter().any(|v| *v != 0.0)
                    || self.meas_n.column(c).iter().any(|v| *v != 0.0)
            })
            .collect()
    }

    /// Same model with the measurement switched off (`B = N = 0`).
    pub fn unconditional(&self) -> Self {
        Self {
            meas_b: DMatrix::zeros(self.meas_b.nrows(), self.meas_b.ncols()),
            meas_n: DMatrix::zeros(self.meas_n.nrows(), self.meas_n.ncols()),
            ..self.clone()
        }
    }
}

/// Linearized coupling `g = g₀|E| / √(ω_m² + κ²/4)` of the two-tone drive.
pub fn derive_coupling(g0: f64, drive_amp: f64, omega_m: f64, kappa: f64) -> Result<f64> {
    if !(g0 > 0.0 && drive_amp > 0.0 && omega_m > 0.0 && kappa > 0.0) {
        return Err(Error::invalid("derive_coupling needs positive inputs"));
    }
    Ok(g0 * drive_amp / omega_m.hypot(kappa / 2.0))
}

/// Bath covariance `diag[½, ½, n̄+½, …]`.
pub fn bath_covariance<P: SystemParams + ?Sized>(p: &P) -> DMatrix<f64> {
    let dim = 2 * p.n_modes();
    DMatrix::from_fn(dim, dim, |i, j| match (i == j, i < 2) {
        (false, _) => 0.0,
        (true, true) => 0.5,
        (true, false) => p.nbar() + 0.5,
    })
}

/// Diffusion `diag[κ/2, κ/2, (n̄+½)γ, …]`.
pub fn diffusion<P: SystemParams + ?Sized>(p: &P) -> DMatrix<f64> {
    let dim = 2 * p.n_modes();
    DMatrix::from_fn(dim, dim, |i, j| match (i == j, i < 2) {
        (false, _) => 0.0,
        (true, true) => p.kappa() / 2.0,
        (true, false) => (p.nbar() + 0.5) * p.gamma(),
    })
}

/// `C = √κ ω⁻¹ ⊕ √γ ω⁻¹ ⊕ …`.
fn coupling_to_baths<P: SystemParams + ?Sized>(p: &P) -> DMatrix<f64> {
    let w_inv = omega().transpose();
    let mut blocks = vec![&w_inv * p.kappa().sqrt()];
    blocks.extend((1..p.n_modes()).map(|_| &w_inv * p.gamma().sqrt()));
    direct_sum(&blocks)
}

/// Measurement matrices `B = CΩ(σ_b + σ_meas^η)^{-1/2}` and
/// `N = ΩCσ_b(σ_b + σ_meas^η)^{-1/2}`.
///
/// Mechanical output channels are unmonitored: their efficiency is exactly
/// zero, so the corresponding block of `(σ_b + σ_meas^η)^{-1/2}` is taken at
/// its limit, zero, and those columns of `B` and `N` vanish.
pub fn measurement_matrices<P: SystemParams + ?Sized>(
    p: &P,
    spec: &MeasurementSpec,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    spec.validate()?;
    let n = p.n_modes();
    let sigma_b = bath_covariance(p);
    let c = coupling_to_baths(p);
    let big_omega = direct_sum(&vec![omega(); n]);

    let mut blocks = Vec::with_capacity(n);
    for channel in 0..n {
        let eff = if channel == 0 { spec.eta_optical } else { 0.0 };
        if eff == 0.0 {
            blocks.push(DMatrix::zeros(2, 2));
            continue;
        }
        let meas = spec.projector_covariance() / eff
            + DMatrix::<f64>::identity(2, 2) * ((1.0 - eff) / (2.0 * eff));
        let bath = sigma_b.view((2 * channel, 2 * channel), (2, 2)).into_owned();
        blocks.push(inv_sqrt_spd(&(bath + meas))?);
    }
    let inv_sqrt = direct_sum(&blocks);
    let b = &c * &big_omega * &inv_sqrt;
    let nn = &big_omega * &c * &sigma_b * &inv_sqrt;
    Ok((b, nn))
}

pub fn drift_two_mode(t: f64, p: &TwoModeParams, rwa: bool) -> DMatrix<f64> {
    evaluate_drift(&p.drift_parts(), 2.0 * p.omega_m * t, rwa)
}

pub fn drift_three_mode(t: f64, p: &ThreeModeParams, rwa: bool) -> DMatrix<f64> {
    evaluate_drift(&p.drift_parts(), 2.0 * p.omega * t, rwa)
}

fn evaluate_drift(parts: &DriftParts, phase: f64, rwa: bool) -> DMatrix<f64> {
    if rwa {
        return parts.constant.clone();
    }
    let (s, c) = phase.sin_cos();
    &parts.constant + &parts.cos * c + &parts.sin * s
}

/// Bundles drift, diffusion and measurement matrices for one system.
pub fn build_model<P: SystemParams + ?Sized>(
    p: &P,
    spec: &MeasurementSpec,
    rwa: bool,
) -> Result<ModelMatrices> {
    p.validate()?;
    if spec.eta_optical != p.eta() {
        return Err(Error::invalid(format!(
            "eta_optical ({}) disagrees with eta ({})",
            spec.eta_optical,
            p.eta()
        )));
    }
    let (b, n) = measurement_matrices(p, spec)?;
    ModelMatrices::from_parts(
        p.drift_parts(),
        2.0 * p.frequency(),
        diffusion(p),
        bath_covariance(p),
        b,
        n,
        rwa,
    )
}

/// [`build_model`] with phase-quadrature homodyne at the system efficiency.
pub fn build_homodyne_model<P: SystemParams + ?Sized>(p: &P, rwa: bool) -> Result<ModelMatrices> {
    build_model(p, &MeasurementSpec::homodyne(p.eta()), rwa)
}

/// Period `π/ω` of the counter-rotating modulation.
pub fn modulation_period<P: SystemParams + ?Sized>(p: &P) -> f64 {
    PI / p.frequency()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn literal_two_mode(t: f64, g: f64, k: f64, ga: f64) -> DMatrix<f64> {
        let (c, s) = ((2.0 * t).cos(), (2.0 * t).sin());
        #[rustfmt::skip]
        let m = DMatrix::from_row_slice(4, 4, &[
            -k / 2.0, 0.0, 0.0, 0.0,
            0.0, -k / 2.0, g * (1.0 + c), g * s,
            -g * s, 0.0, -ga / 2.0, 0.0,
            g * (1.0 + c), 0.0, 0.0, -ga / 2.0,
        ]);
        m
    }

    #[test]
    fn two_mode_drift_matches_printed_matrix() {
        let p = TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 1.0);
        let period = modulation_period(&p);
        for t in [0.0, period / 8.0, period / 3.0] {
            let a = drift_two_mode(t, &p, false);
            assert!(max_abs(&(a - literal_two_mode(t, 0.05, 0.1, 1e-4))) < 1e-15);
        }
    }

    #[test]
    fn two_mode_drift_at_zero() {
        let p = TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 1.0);
        let a = drift_two_mode(0.0, &p, false);
        assert_eq!(a[(1, 2)], 0.1);
        assert_eq!(a[(3, 0)], 0.1);
        assert_eq!(a[(1, 3)], 0.0);
        assert_eq!(a[(2, 0)], 0.0);
        let free = drift_two_mode(0.3, &TwoModeParams { g: 0.0, ..p }, false);
        let expected = DMatrix::from_diagonal(&vec![-0.05, -0.05, -5e-5, -5e-5].into());
        assert_eq!(free, expected);
    }

    #[test]
    fn period_average_is_rwa() {
        let p = TwoModeParams::new(0.3, 0.2, 1e-3, 5.0, 0.7);
        let n = 512;
        let period = modulation_period(&p);
        let mut acc = DMatrix::zeros(4, 4);
        for k in 0..n {
            acc += drift_two_mode(period * k as f64 / n as f64, &p, false);
        }
        acc /= n as f64;
        assert!(max_abs(&(acc - drift_two_mode(0.0, &p, true))) < 1e-12);

        let q = ThreeModeParams::new(0.1, 0.3, 0.2, 1e-4, 10.0, 1.0);
        let period = modulation_period(&q);
        let mut acc = DMatrix::zeros(6, 6);
        for k in 0..n {
            acc += drift_three_mode(period * k as f64 / n as f64, &q, false);
        }
        acc /= n as f64;
        assert!(max_abs(&(acc - drift_three_mode(1.234, &q, true))) < 1e-12);
    }

    #[test]
    fn three_mode_drift_literal() {
        let (g, k, ga, om) = (0.3, 0.2, 1e-4, 0.1);
        let q = ThreeModeParams::new(om, g, k, ga, 10.0, 1.0);
        let t: f64 = 0.37;
        let (c, s) = ((2.0 * t).cos(), (2.0 * t).sin());
        let gc = g * (1.0 + c);
        let h = -ga / 2.0;
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(6, 6, &[
            -k / 2.0, 0.0, 0.0, 0.0, 0.0, 0.0,
            0.0, -k / 2.0, gc, g * s, gc, g * s,
            -g * s, 0.0, h, om, 0.0, 0.0,
            gc, 0.0, -om, h, 0.0, 0.0,
            -g * s, 0.0, 0.0, 0.0, h, -om,
            gc, 0.0, 0.0, 0.0, om, h,
        ]);
        assert!(max_abs(&(drift_three_mode(t, &q, false) - expected)) < 1e-15);

        let free = drift_three_mode(t, &ThreeModeParams { g: 0.0, omega_split: 0.0, ..q }, false);
        assert!(max_abs(&(free.clone() - DMatrix::from_diagonal(&free.diagonal()))) == 0.0);
    }

    #[test]
    fn baths_and_diffusion() {
        let p = TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 1.0);
        assert_eq!(bath_covariance(&p).diagonal().as_slice(), &[0.5, 0.5, 10.5, 10.5]);
        let zero = TwoModeParams { nbar: 0.0, ..p };
        assert_eq!(bath_covariance(&zero), DMatrix::from_diagonal_element(4, 4, 0.5));
        let q = ThreeModeParams { nbar: 100.0, ..Default::default() };
        assert_eq!(
            bath_covariance(&q).diagonal().as_slice(),
            &[0.5, 0.5, 100.5, 100.5, 100.5, 100.5]
        );

        let d = diffusion(&p);
        let expected = [0.05, 0.05, 1.05e-3, 1.05e-3];
        for (x, y) in d.diagonal().iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
        let cold = TwoModeParams { nbar: 0.0, gamma: 0.0, ..p };
        assert_eq!(diffusion(&cold).diagonal().as_slice(), &[0.05, 0.05, 0.0, 0.0]);
        let d3 = diffusion(&q);
        assert_eq!(d3.nrows(), 6);
        assert!((d3[(5, 5)] - 100.5 * 1e-4).abs() < 1e-15);
    }

    #[test]
    fn coupling_formula() {
        let g = derive_coupling(1e-5, 3000.0, 1.0, 0.1).unwrap();
        assert!((g - 0.029_962_570_166_335).abs() < 1e-12);
        let g = derive_coupling(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((g - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let g = derive_coupling(1.0, 1.0, 1.0, 1e-9).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
        assert!(derive_coupling(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_efficiency_switches_off_measurement() {
        let p = TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 0.0);
        let (b, n) = measurement_matrices(&p, &MeasurementSpec::homodyne(0.0)).unwrap();
        assert_eq!(max_abs(&b), 0.0);
        assert_eq!(max_abs(&n), 0.0);
    }

    #[test]
    fn mechanical_columns_vanish() {
        for eta in [0.3, 1.0] {
            let p = ThreeModeParams::default();
            let (b, n) = measurement_matrices(&p, &MeasurementSpec::homodyne(eta)).unwrap();
            for c in 2..6 {
                assert!(b.column(c).iter().all(|v| *v == 0.0));
                assert!(n.column(c).iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn ideal_homodyne_limit() {
        // r → 0, θ = π/2: only the phase channel survives, B = √(2ηκ), N = B/2
        let p = TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 0.5);
        let (b, n) = measurement_matrices(&p, &MeasurementSpec::homodyne(0.5)).unwrap();
        let expected = (2.0 * 0.5 * 0.1f64).sqrt();
        assert!((b[(1, 1)] - expected).abs() < 1e-7);
        assert!((n[(1, 1)] - expected / 2.0).abs() < 1e-7);
        assert!(b[(0, 0)].abs() < 1e-4);
    }

    #[test]
    fn measurement_stable_in_r() {
        let p = TwoModeParams::default();
        let mk = |r| {
            let spec = MeasurementSpec { r, ..MeasurementSpec::default() };
            measurement_matrices(&p, &spec).unwrap()
        };
        let (b6, n6) = mk(1e-6);
        let (b8, n8) = mk(1e-8);
        for (x, y) in b6.iter().zip(b8.iter()).chain(n6.iter().zip(n8.iter())) {
            let scale = x.abs().max(y.abs());
            if scale > 1e-3 {
                assert!((x - y).abs() / scale < 1e-4);
            }
        }
    }

    #[test]
    fn model_validation() {
        let bad = TwoModeParams { eta: 1.5, ..Default::default() };
        let err = build_model(&bad, &MeasurementSpec::default(), true).unwrap_err();
        assert!(err.to_string().contains("eta"));
        let spec = MeasurementSpec { r: 0.0, ..Default::default() };
        assert!(build_model(&TwoModeParams::default(), &spec, true).is_err());
        let q = ThreeModeParams { omega_split: 1.0, ..Default::default() };
        assert!(q.validate().is_err());
    }

    #[test]
    fn model_periodicity_and_rwa() {
        let p = TwoModeParams::default();
        let full = build_model(&p, &MeasurementSpec::default(), false).unwrap();
        let t = 0.731;
        assert!(max_abs(&(full.drift(t) - full.drift(t + full.period()))) < 1e-14);
        assert!((full.period() - PI).abs() < 1e-15);
        let rwa = build_model(&p, &MeasurementSpec::default(), true).unwrap();
        assert_eq!(rwa.drift(0.0), rwa.drift(rwa.period() / 3.0));
        assert!(linalg::min_eigenvalue_sym(rwa.diffusion()) >= 0.0);
        assert_eq!(full.monitored_channels(), vec![0, 1]);
    }
}
