//! Closed-form stationary conditional state of the two-mode system without
//! counter-rotating terms, its limiting regimes and derived figures of merit.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::model::{SystemParams, TwoModeParams};

#[derive(Debug, Clone, PartialEq)]
pub struct RwaSteadyState {
    pub cm: CovarianceMatrix,
    /// `ζ = √(γκ[16g²η(1+2n̄) + γκ])`.
    pub zeta: f64,
    pub cooperativity: f64,
}

fn require_rates(p: &TwoModeParams) -> Result<()> {
    p.validate()?;
    if !(p.gamma > 0.0) {
        return Err(Error::invalid("gamma: must be positive for the stationary state"));
    }
    Ok(())
}

/// `C = 4g²/(κγ)`.
pub fn cooperativity(p: &TwoModeParams) -> f64 {
    4.0 * p.g * p.g / (p.kappa * p.gamma)
}

/// Stationary conditional covariance of the rotating-wave model under ideal
/// phase homodyne detection with efficiency `η`.
///
/// The expressions are arranged so that `η = 0` and `g = 0` evaluate exactly
/// to the unconditional limits instead of `0/0`.
pub fn steady_state_rwa(p: &TwoModeParams) -> Result<RwaSteadyState> {
    require_rates(p)?;
    let TwoModeParams {
        g,
        kappa: k,
        gamma: ga,
        nbar,
        eta,
        ..
    } = *p;
    let th = 1.0 + 2.0 * nbar;
    let gk = ga * k;
    let zeta = (gk * (16.0 * g * g * eta * th + gk)).sqrt();
    let q = (ga * ga + k * k + 2.0 * zeta).sqrt();
    let denom = (zeta + gk) * (q + ga + k);

    let var_xm = q * ga * th * (q + k - ga) / denom;
    let s23 = 2.0 * g * th * ga * (q + k - ga) / denom;
    let s22 = 0.5 + 8.0 * g * g * ga * th / denom;
    let s14 = g / (ga + k);
    let s44 = nbar + 0.5 + 2.0 * g * g / (ga * (ga + k));

    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = 0.5;
    m[(1, 1)] = s22;
    m[(2, 2)] = var_xm;
    m[(3, 3)] = s44;
    m[(0, 3)] = s14;
    m[(3, 0)] = s14;
    m[(1, 2)] = s23;
    m[(2, 1)] = s23;
    Ok(RwaSteadyState {
        cm: CovarianceMatrix::from_symmetric(m),
        zeta,
        cooperativity: cooperativity(p),
    })
}

/// Bad-cavity variance `(√(1 + 4ηC(1+2n̄)) − 1)/(4ηC)`, evaluated as
/// `(1+2n̄)/(√(1 + 4ηC(1+2n̄)) + 1)`.
pub fn adiabatic_variance(p: &TwoModeParams) -> Result<f64> {
    require_rates(p)?;
    let th = 1.0 + 2.0 * p.nbar;
    let x = 4.0 * p.eta * cooperativity(p) * th;
    Ok(th / ((1.0 + x).sqrt() + 1.0))
}

/// Leading slow-cavity term `(1+2n̄)^{3/4} (Cη)^{-1/4} √(γ/κ)`.
pub fn slow_cavity_variance(p: &TwoModeParams) -> Result<f64> {
    require_rates(p)?;
    if !(p.eta > 0.0 && p.g > 0.0) {
        return Err(Error::invalid("eta and g must be positive for the slow-cavity limit"));
    }
    let th = 1.0 + 2.0 * p.nbar;
    Ok(th.powf(0.75) / (cooperativity(p) * p.eta).powf(0.25) * (p.gamma / p.kappa).sqrt())
}

/// Approximately optimal cavity decay `4 g^{2/3} [ηγ(1+2n̄)]^{1/3}`.
pub fn kappa_opt(p: &TwoModeParams) -> Result<f64> {
    require_rates(p)?;
    if !(p.eta > 0.0) {
        return Err(Error::invalid("eta: must be positive for an optimal kappa"));
    }
    Ok(4.0 * p.g.powf(2.0 / 3.0) * (p.eta * p.gamma * (1.0 + 2.0 * p.nbar)).cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{is_physical, squeezing_db};
    use crate::linalg::max_abs;
    use crate::model::build_homodyne_model;
    use crate::riccati::riccati_rhs;

    fn demo() -> TwoModeParams {
        TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 1.0)
    }

    #[test]
    fn structural_zeros_and_fixed_entries() {
        let s = steady_state_rwa(&demo()).unwrap().cm;
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            assert_eq!(s[(i, j)], 0.0);
            assert_eq!(s[(j, i)], 0.0);
        }
        assert_eq!(s[(0, 0)], 0.5);
        assert!((s[(0, 3)] - 0.05 / (0.1 + 1e-4)).abs() < 1e-15);
        let pm = 10.5 + 2.0 * 0.0025 / (1e-4 * (0.1 + 1e-4));
        assert!((s[(3, 3)] - pm).abs() < 1e-12 * pm);
        assert!(is_physical(&s, 1e-9).unwrap());
    }

    /// Direct transcription of the raw expressions, valid for η > 0.
    fn literal(p: &TwoModeParams) -> (f64, f64, f64) {
        let (g, k, ga, n, eta) = (p.g, p.kappa, p.gamma, p.nbar, p.eta);
        let zeta = (ga * k * (16.0 * g * g * eta * (1.0 + 2.0 * n) + ga * k)).sqrt();
        let q = (ga * ga + k * k + 2.0 * zeta).sqrt();
        let xm = q / (16.0 * g * g * eta * k) * (zeta + ga * ga - ga * q);
        let s22 = (q + k * (2.0 * eta - 1.0) - ga) / (4.0 * eta * k);
        let s23 = (zeta + ga * ga - ga * q) / (8.0 * g * eta * k);
        (xm, s22, s23)
    }

    #[test]
    fn stable_forms_agree_with_raw_expressions() {
        for p in [
            demo(),
            TwoModeParams::new(0.3, 1e-3, 1e-4, 10.0, 1.0),
            TwoModeParams::new(0.01, 10.0, 1e-4, 10.0, 0.5),
        ] {
            let s = steady_state_rwa(&p).unwrap().cm;
            let (xm, s22, s23) = literal(&p);
            assert!((s[(2, 2)] - xm).abs() < 1e-8 * xm, "{p:?}");
            assert!((s[(1, 1)] - s22).abs() < 1e-8 * s22, "{p:?}");
            assert!((s[(1, 2)] - s23).abs() < 1e-8 * s23.abs(), "{p:?}");
        }
    }

    #[test]
    fn is_a_riccati_fixed_point() {
        for p in [
            demo(),
            TwoModeParams::new(0.3, 1e-3, 1e-4, 10.0, 1.0),
            TwoModeParams::new(0.01, 100.0, 1e-4, 10.0, 1.0),
            TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 0.25),
        ] {
            let s = steady_state_rwa(&p).unwrap().cm;
            let model = build_homodyne_model(&p, true).unwrap();
            let rhs = riccati_rhs(&s, &model, 0.0).unwrap();
            assert!(max_abs(&rhs) < 1e-9 * max_abs(s.matrix()), "{p:?}: {}", max_abs(&rhs));
        }
    }

    #[test]
    fn unconditional_limit() {
        let p = TwoModeParams { eta: 0.0, ..demo() };
        let st = steady_state_rwa(&p).unwrap();
        assert!((st.cm[(2, 2)] - 10.5).abs() < 1e-12);
        assert!((st.cm[(1, 2)] - 0.05 * 21.0 / (0.1 + 1e-4)).abs() < 1e-12);
        let s22 = 0.5 + 2.0 * 0.0025 * 21.0 / (0.1 * (0.1 + 1e-4));
        assert!((st.cm[(1, 1)] - s22).abs() < 1e-12 * s22);
        let tiny = steady_state_rwa(&TwoModeParams { eta: 1e-14, ..demo() }).unwrap();
        assert!((tiny.cm[(2, 2)] - 10.5).abs() < 1e-6);
    }

    #[test]
    fn phase_quadrature_never_squeezed() {
        for g in [0.01, 0.05, 0.3] {
            for k in [1e-3, 0.1, 10.0] {
                let s = steady_state_rwa(&TwoModeParams::new(g, k, 1e-4, 10.0, 1.0)).unwrap();
                assert!(s.cm[(1, 1)] >= 0.5);
            }
        }
    }

    #[test]
    fn figures_of_merit() {
        let c = cooperativity(&TwoModeParams::new(0.01, 0.01, 1e-4, 10.0, 1.0));
        assert!((c - 400.0).abs() < 1e-9);
        let p = TwoModeParams::new(0.01, 0.01, 1e-4, 10.0, 1.0);
        let q = TwoModeParams { g: 0.02, kappa: 0.04, ..p };
        assert!((cooperativity(&q) - c).abs() < 1e-9);

        let ko = kappa_opt(&demo()).unwrap();
        let oracle = 4.0 * 0.05f64.powf(2.0 / 3.0) * (1e-4 * 21.0f64).powf(1.0 / 3.0);
        assert!((ko - oracle).abs() < 1e-15);
        assert!((ko - 0.069521).abs() < 1e-6);
        let k8 = kappa_opt(&TwoModeParams { g: 0.4, ..demo() }).unwrap();
        assert!((k8 / ko - 4.0).abs() < 1e-12);
    }

    #[test]
    fn adiabatic_limits() {
        let weak = TwoModeParams::new(1e-9, 1.0, 1e-4, 10.0, 1.0);
        assert!((adiabatic_variance(&weak).unwrap() - 10.5).abs() < 1e-9);
        let strong = TwoModeParams::new(0.3, 0.01, 1e-4, 10.0, 1.0);
        let c = cooperativity(&strong);
        let asym = (21.0 / (4.0 * c)).sqrt();
        assert!((adiabatic_variance(&strong).unwrap() / asym - 1.0).abs() < 0.01);
    }

    #[test]
    fn slow_cavity_scalings() {
        let p = TwoModeParams::new(0.3, 1e-3, 1e-4, 10.0, 1.0);
        let v = slow_cavity_variance(&p).unwrap();
        // doubling κ at fixed C: scale g by √2
        let q = TwoModeParams { kappa: 2e-3, g: 0.3 * 2f64.sqrt(), ..p };
        assert!((slow_cavity_variance(&q).unwrap() / v - 0.5f64.sqrt()).abs() < 1e-12);
        let low = TwoModeParams { eta: 0.25, ..p };
        assert!((slow_cavity_variance(&low).unwrap() / v - 2f64.sqrt()).abs() < 1e-12);
        let exact = steady_state_rwa(&p).unwrap().cm[(2, 2)];
        assert!((exact / v - 1.0).abs() < 0.1);
    }

    #[test]
    fn optimum_is_near_kappa_opt() {
        let p = demo();
        let ko = kappa_opt(&p).unwrap();
        let at = |k: f64| steady_state_rwa(&TwoModeParams { kappa: k, ..p }).unwrap().cm[(2, 2)];
        let best = (0..4000)
            .map(|i| 10f64.powf(-4.0 + 6.0 * i as f64 / 3999.0))
            .map(at)
            .fold(f64::INFINITY, f64::min);
        assert!(squeezing_db(best).unwrap() - squeezing_db(at(ko)).unwrap() < 1.0);
    }

    #[test]
    fn rejects_bad_efficiency() {
        assert!(steady_state_rwa(&TwoModeParams { eta: -0.1, ..demo() }).is_err());
        assert!(steady_state_rwa(&TwoModeParams { eta: 1.1, ..demo() }).is_err());
    }
}
