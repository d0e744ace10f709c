use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use optobae::floquet::{fourier_expansion, Sigma1Form};
use optobae::gaussian::log_negativity;
use optobae::linalg::{asymmetry, max_abs_complex};
use optobae::model::build_homodyne_model;
use optobae::riccati::{
    ensemble_final_means, integrate_riccati, periodic_steady_state, ConvergenceStrategy,
    PeriodicSettings, SigmaSchedule,
};
use optobae::{CovarianceMatrix, ThreeModeParams, TwoModeParams};

#[test]
fn rk4_error_drops_sixteenfold_per_halving() {
    let p = TwoModeParams::new(0.2, 0.3, 0.05, 2.0, 1.0);
    let model = build_homodyne_model(&p, false).unwrap();
    let s0 = CovarianceMatrix::new(model.bath_covariance().clone()).unwrap();
    let t_end = 4.0;
    let end = |dt: f64| integrate_riccati(&model, &s0, dt, t_end).unwrap().last().unwrap().clone();
    let reference = end(0.2 / 64.0);
    let errs: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&dt| end(dt).max_abs_diff(&reference))
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((13.0..19.0).contains(&ratio), "ratio {ratio}, errors {errs:?}");
    }
}

#[test]
fn period_map_contracts_near_the_attractor() {
    let p = TwoModeParams::new(0.05, 0.2, 0.01, 1.0, 1.0);
    let model = build_homodyne_model(&p, false).unwrap();
    let settings = PeriodicSettings {
        strategy: ConvergenceStrategy::Iterate,
        ..Default::default()
    };
    let st = periodic_steady_state(&model, &settings).unwrap();
    let h = &st.residual_history;
    let start = h.iter().position(|&r| r < 10.0 * settings.tol).unwrap();
    assert!(h.len() - start >= 3, "{h:?}");
    for w in h[start..].windows(2) {
        assert!(w[1] <= w[0], "{} then {}", w[0], w[1]);
    }
    let newton = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
    assert!(newton.time_average().max_abs_diff(&st.time_average()) < 1e-6);
}

/// The numerical first Fourier coefficient agrees with `σ₁` up to `O(g²)`
/// relative corrections. The raw oscillating part also carries the second
/// harmonic, which is only `O(g)` smaller.
#[test]
fn first_harmonic_matches_numerical_oscillation() {
    for g in [0.005, 0.01, 0.02] {
        let p = TwoModeParams::new(g, 0.2, 1e-2, 1.0, 1.0);
        let f = fourier_expansion(&p, Sigma1Form::Printed).unwrap();
        let model = build_homodyne_model(&p, false).unwrap();
        let st = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
        let n = st.samples.len() as f64;
        let mut s1 = DMatrix::<Complex64>::zeros(4, 4);
        for (phase, s) in &st.samples {
            let w = Complex64::from_polar(1.0 / n, -TAU * phase);
            s1 += s.matrix().map(|x| w * x);
            assert!(asymmetry(&f.reconstruct(phase * st.period)) < 1e-12);
        }
        let rel = max_abs_complex(&(&s1 - &f.sigma1)) / max_abs_complex(&f.sigma1);
        assert!(rel < 10.0 * g * g, "g = {g}: relative error {rel}");
    }
}

#[test]
fn phase_variance_is_independent_of_efficiency() {
    let base = TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 1.0);
    let exact = 10.5 + 2.0 * 0.05f64.powi(2) / (1e-4 * (1e-4 + 0.1));
    for eta in [0.25, 0.5, 1.0] {
        let p = TwoModeParams { eta, ..base };
        let model = build_homodyne_model(&p, true).unwrap();
        let st = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
        let pm = st.stats.mean[(3, 3)];
        assert!((pm / exact - 1.0).abs() < 1e-6, "eta {eta}: {pm} vs {exact}");
    }
}

#[test]
fn degenerate_mechanics_are_exchange_symmetric() {
    for (g, kappa) in [(0.3, 0.3), (0.05, 0.1), (0.2, 2.0)] {
        let p = ThreeModeParams::new(0.0, g, kappa, 1e-4, 10.0, 1.0);
        for rwa in [true, false] {
            let model = build_homodyne_model(&p, rwa).unwrap();
            let st = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
            for (_, s) in st.samples.iter().step_by(8) {
                let e1 = log_negativity(s, &[1]).unwrap();
                let e2 = log_negativity(s, &[2]).unwrap();
                assert!((e1 - e2).abs() < 1e-8, "{e1} vs {e2}");
            }
        }
    }
}

#[test]
fn periodic_state_is_deterministic() {
    let p = ThreeModeParams::default();
    let model = build_homodyne_model(&p, false).unwrap();
    let a = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
    let b = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let p = TwoModeParams::new(0.05, 0.2, 0.05, 2.0, 1.0);
    let model = build_homodyne_model(&p, true).unwrap();
    let st = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
    let schedule = SigmaSchedule::Periodic(st);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                ensemble_final_means(&model, &schedule, &DVector::zeros(4), 11, 24, 0.01, 2.0)
                    .unwrap()
            })
    };
    assert_eq!(run(1), run(3));
}
