mod common;

use common::{cm_strategy, local_symplectic, transform};
use optobae::entanglement::{class_from_negativities, classify_three_mode, SeparabilityClass, NPT_THRESHOLD};
use optobae::gaussian::{
    duan_sum, is_physical, log_negativity, partial_transpose, purity, symplectic_eigenvalues,
};
use optobae::model::{diffusion, ThreeModeParams, TwoModeParams};
use optobae::linalg::{asymmetry, min_eigenvalue_sym};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_states_are_physical(s in cm_strategy(3, 0.6)) {
        prop_assert!(is_physical(&s, 1e-9).unwrap());
    }

    #[test]
    fn local_rotations_keep_symplectic_spectrum(
        s in cm_strategy(3, 0.6),
        angles in prop::collection::vec(0.0..std::f64::consts::TAU, 3),
    ) {
        let ops: Vec<_> = angles.iter().map(|&a| (a, 0.0)).collect();
        let t = transform(&s, &local_symplectic(&ops));
        let a = symplectic_eigenvalues(&s).unwrap();
        let b = symplectic_eigenvalues(&t).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10 * x.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn negativity_is_locally_invariant(
        s in cm_strategy(3, 0.5),
        ops in prop::collection::vec((0.0..std::f64::consts::TAU, -0.5..0.5f64), 3),
        part in 0usize..3,
    ) {
        let t = transform(&s, &local_symplectic(&ops));
        let a = log_negativity(&s, &[part]).unwrap();
        let b = log_negativity(&t, &[part]).unwrap();
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn partial_transpose_is_an_involution(s in cm_strategy(3, 0.8), part in 0usize..3) {
        let once = partial_transpose(&s, &[part]).unwrap();
        let twice = partial_transpose(&once, &[part]).unwrap();
        prop_assert_eq!(twice.matrix(), s.matrix());
    }

    #[test]
    fn purity_is_bounded(s in cm_strategy(2, 0.8)) {
        prop_assert!(purity(&s).unwrap() <= 1.0 + 1e-12);
    }

    #[test]
    fn ppt_two_mode_states_obey_duan(s in cm_strategy(2, 0.6)) {
        if log_negativity(&s, &[0]).unwrap() == 0.0 {
            prop_assert!(duan_sum(&s, 0, 1).unwrap() >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn class_depends_only_on_negativities(s in cm_strategy(3, 0.6)) {
        let r = classify_three_mode(&s, None).unwrap();
        prop_assert_eq!(r.class, class_from_negativities(r.bipartition_negativity));
        let all_npt = r.bipartition_negativity.iter().all(|&e| e > NPT_THRESHOLD);
        prop_assert_eq!(r.class == SeparabilityClass::FullyInseparable, all_npt);
        prop_assert!(r.bipartition_negativity.iter().all(|&e| e >= 0.0));
    }

    #[test]
    fn duan_violation_implies_mechanical_npt(s in cm_strategy(3, 0.6)) {
        let r = classify_three_mode(&s, None).unwrap();
        if r.duan_value < 1.0 {
            let mech = s.reduced(&[1, 2]).unwrap();
            prop_assert!(log_negativity(&mech, &[0]).unwrap() > 0.0);
        }
    }

    #[test]
    fn diffusion_is_symmetric_psd(
        g in 0.0..1.0f64, kappa in 1e-4..10.0f64, gamma in 1e-6..1.0f64,
        nbar in 0.0..1e3f64, split in 0.0..0.9f64,
    ) {
        let two = diffusion(&TwoModeParams::new(g, kappa, gamma, nbar, 1.0));
        let three = diffusion(&ThreeModeParams::new(split, g, kappa, gamma, nbar, 1.0));
        for d in [two, three] {
            prop_assert_eq!(asymmetry(&d), 0.0);
            prop_assert!(min_eigenvalue_sym(&d) >= 0.0);
        }
    }
}
