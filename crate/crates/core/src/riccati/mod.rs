//! Deterministic Riccati flow for the conditional covariance matrix and
//! stochastic sampling of the conditional means.

mod kernel;
mod periodic;
mod sampler;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::{is_physical, CovarianceMatrix, PHYSICALITY_TOL};
use crate::linalg::{self, solve_lyapunov_kron, symmetrize};
use crate::model::ModelMatrices;

use kernel::{from_dynamic, is_finite, to_dynamic, with_dim, Flow};

pub use periodic::{
    periodic_steady_state, ConvergenceStrategy, ElementStats, PeriodicSettings, PeriodicState,
    DEFAULT_DT, DEFAULT_SAMPLES_PER_PERIOD, DEFAULT_TOL,
};
pub use sampler::{
    ensemble_final_means, sample_covariance, sample_trajectory, DiagnosticCurrent, SigmaSchedule,
    TrajectoryRecord,
};

/// `Aσ + σAᵀ + D − (σB − N)(σB − N)ᵀ` at time `t`, symmetrized.
pub fn riccati_rhs(sigma: &CovarianceMatrix, model: &ModelMatrices, t: f64) -> Result<DMatrix<f64>> {
    if sigma.dim() != model.dim() {
        return Err(Error::invalid(format!(
            "covariance has dimension {} but the model has {}",
            sigma.dim(),
            model.dim()
        )));
    }
    let s = sigma.matrix();
    let a = model.drift(t);
    let x = s * model.meas_b() - model.meas_n();
    let r = &a * s + s * a.transpose() + model.diffusion() - &x * x.transpose();
    Ok(symmetrize(&r))
}

/// Covariance matrices at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CovarianceMatrix>,
}

impl CovarianceTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&CovarianceMatrix> {
        self.states.last()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &CovarianceMatrix)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

fn check_sample(sigma: &CovarianceMatrix, time: f64) -> Result<()> {
    if !is_physical(sigma, PHYSICALITY_TOL)? {
        return Err(Error::IntegrationDiverged {
            time,
            reason: "state violates the uncertainty principle".into(),
        });
    }
    Ok(())
}

/// RK4 integration from `t = 0` to `t_end`, storing every step.
pub fn integrate_riccati(
    model: &ModelMatrices,
    sigma0: &CovarianceMatrix,
    dt: f64,
    t_end: f64,
) -> Result<CovarianceTrajectory> {
    integrate_riccati_strided(model, sigma0, 0.0, dt, t_end, 1)
}

/// RK4 integration from `t0` to `t_end`, storing the initial state and every
/// `stride`-th step. The final state is always stored. The last step is
/// shortened when `t_end − t0` is not a multiple of `dt`.
pub fn integrate_riccati_strided(
    model: &ModelMatrices,
    sigma0: &CovarianceMatrix,
    t0: f64,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<CovarianceTrajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt must be positive"));
    }
    if !(t_end >= t0) || stride == 0 {
        return Err(Error::invalid("need t_end >= t0 and stride >= 1"));
    }
    if sigma0.dim() != model.dim() {
        return Err(Error::invalid("initial covariance does not match the model dimension"));
    }
    check_sample(sigma0, t0)?;
    with_dim!(model.dim(), |d| integrate_impl(
        &Flow::new(model, d),
        from_dynamic(sigma0.matrix(), d),
        t0,
        dt,
        t_end,
        stride
    ))
}

fn integrate_impl<D: nalgebra::Dim>(
    flow: &Flow<D>,
    mut s: kernel::Mat<D>,
    t0: f64,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<CovarianceTrajectory>
where
    nalgebra::DefaultAllocator: nalgebra::allocator::Allocator<D, D>,
{
    let span = t_end - t0;
    let n_steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = CovarianceTrajectory {
        times: vec![t0],
        states: vec![CovarianceMatrix::from_symmetric(to_dynamic(&s))],
    };
    for k in 0..n_steps {
        let t = t0 + k as f64 * dt;
        let h = if k + 1 == n_steps { t_end - t } else { dt };
        s = flow.step(&s, t, h);
        if !is_finite(&s) {
            return Err(Error::numerical(format!("non-finite covariance at t = {}", t + h)));
        }
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            let time = if k + 1 == n_steps { t_end } else { t + h };
            let cm = CovarianceMatrix::from_symmetric(symmetrize(&to_dynamic(&s)));
            check_sample(&cm, time)?;
            out.times.push(time);
            out.states.push(cm);
        }
    }
    Ok(out)
}

/// Solves `AX + XAᵀ + D = 0` for a Hurwitz `A`.
pub fn lyapunov_steady_state(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<CovarianceMatrix> {
    if !a.is_square() || a.shape() != d.shape() {
        return Err(Error::invalid("A and D must be square with equal shapes"));
    }
    let abscissa = linalg::spectral_abscissa(a)?;
    if abscissa >= 0.0 {
        return Err(Error::invalid(format!(
            "drift is not Hurwitz (largest real part {abscissa:.3e})"
        )));
    }
    let x = solve_lyapunov_kron(a, d)?;
    CovarianceMatrix::new(symmetrize(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::steady_state_rwa;
    use crate::linalg::max_abs;
    use crate::model::{build_homodyne_model, TwoModeParams};

    #[test]
    fn rhs_without_measurement_is_lyapunov() {
        let p = TwoModeParams { eta: 0.0, ..Default::default() };
        let model = build_homodyne_model(&p, false).unwrap();
        let s = CovarianceMatrix::thermal(&[0.0, 3.0]);
        let t = 0.4;
        let a = model.drift(t);
        let expected = &a * s.matrix() + s.matrix() * a.transpose() + model.diffusion();
        let rhs = riccati_rhs(&s, &model, t).unwrap();
        assert!(max_abs(&(rhs - expected)) < 1e-15);
    }

    #[test]
    fn kernel_matches_literal_rhs() {
        let p = TwoModeParams::new(0.2, 0.3, 1e-2, 2.0, 0.6);
        let model = build_homodyne_model(&p, false).unwrap();
        let s = steady_state_rwa(&p).unwrap().cm;
        for t in [0.0, 0.3, 1.1] {
            let literal = riccati_rhs(&s, &model, t).unwrap();
            let flow = Flow::new(&model, nalgebra::Const::<4>);
            let fast = to_dynamic(&flow.rhs(&from_dynamic(s.matrix(), nalgebra::Const::<4>), t));
            assert!(max_abs(&(literal - fast)) < 1e-12);
        }
    }

    #[test]
    fn rhs_rejects_dimension_mismatch() {
        let model = build_homodyne_model(&TwoModeParams::default(), true).unwrap();
        let s = CovarianceMatrix::vacuum(3);
        assert!(matches!(riccati_rhs(&s, &model, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn decoupled_relaxation() {
        let p = TwoModeParams::new(0.0, 0.1, 0.05, 10.0, 1.0);
        let model = build_homodyne_model(&p, false).unwrap();
        let s0 = CovarianceMatrix::thermal(&[0.0, 0.0]);
        let traj = integrate_riccati_strided(&model, &s0, 0.0, 0.01, 20.0, 100).unwrap();
        for (t, s) in traj.iter() {
            let m = s.matrix();
            assert!(max_abs(&(m - DMatrix::from_diagonal(&m.diagonal()))) < 1e-14);
            let expected = 10.5 + (0.5 - 10.5) * (-0.05 * t).exp();
            assert!((m[(2, 2)] - expected).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn integration_hits_end_time() {
        let model = build_homodyne_model(&TwoModeParams::default(), true).unwrap();
        let s0 = CovarianceMatrix::new(model.bath_covariance().clone()).unwrap();
        let traj = integrate_riccati(&model, &s0, 0.3, 1.0).unwrap();
        assert_eq!(traj.len(), 5);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        assert!(integrate_riccati(&model, &s0, 0.0, 1.0).is_err());
    }

    #[test]
    fn unphysical_start_is_rejected() {
        let model = build_homodyne_model(&TwoModeParams::default(), true).unwrap();
        let bad = CovarianceMatrix::new(DMatrix::from_diagonal_element(4, 4, 0.25)).unwrap();
        let err = integrate_riccati(&model, &bad, 0.01, 0.1).unwrap_err();
        assert!(matches!(err, Error::IntegrationDiverged { time, .. } if time == 0.0));
    }

    #[test]
    fn lyapunov_checks() {
        let a = DMatrix::from_diagonal_element(2, 2, -0.05);
        let d = DMatrix::from_diagonal_element(2, 2, 0.05);
        let x = lyapunov_steady_state(&a, &d).unwrap();
        assert!(max_abs(&(x.matrix() - DMatrix::identity(2, 2) * 0.5)) < 1e-14);
        let unstable = DMatrix::from_diagonal_element(2, 2, 0.05);
        assert!(matches!(
            lyapunov_steady_state(&unstable, &d),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn unconditional_rwa_keeps_thermal_xm() {
        let p = TwoModeParams { eta: 0.0, ..Default::default() };
        let model = build_homodyne_model(&p, true).unwrap();
        let x = lyapunov_steady_state(&model.drift(0.0), model.diffusion()).unwrap();
        assert!((x[(2, 2)] - 10.5).abs() < 1e-9);
    }
}
