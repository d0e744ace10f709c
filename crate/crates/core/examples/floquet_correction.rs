//! Second-order Floquet expansion around the rotating-wave state compared
//! with the numerically converged period average.

use optobae::floquet::{
    fourier_expansion, linearized_stationary_shift, pm_correction_closed_form,
    xm_correction_closed_form, Sigma1Form,
};
use optobae::linalg::max_abs;
use optobae::model::build_homodyne_model;
use optobae::riccati::{periodic_steady_state, PeriodicSettings};
use optobae::TwoModeParams;

fn main() -> optobae::Result<()> {
    println!("   g      max|num - s0|  max|num - s0 - S|  dXm num    dXm shift");
    for g in [0.005, 0.01, 0.02] {
        let p = TwoModeParams::new(g, 0.1, 1e-4, 10.0, 1.0);
        let f = fourier_expansion(&p, Sigma1Form::Printed)?;
        let model = build_homodyne_model(&p, false)?;
        let mean = periodic_steady_state(&model, &PeriodicSettings::default())?.stats.mean;
        let s0 = f.sigma0.matrix();
        // S is a source; the shift it drives comes from the linearized flow
        let shift = linearized_stationary_shift(&f.sigma0, &f.correction0, &model)?;
        println!(
            "{g:6.3}   {:11.3e}   {:14.3e}   {:10.3e}  {:10.3e}",
            max_abs(&(&mean - s0)),
            max_abs(&(&mean - s0 - &f.correction0)),
            mean[(2, 2)] - s0[(2, 2)],
            shift[(2, 2)]
        );
    }

    let p = TwoModeParams::new(0.05, 0.05, 1e-6, 10.0, 1.0);
    let f = fourier_expansion(&p, Sigma1Form::Printed)?;
    println!("\nbackaction-dominated point, gamma = 1e-6:");
    println!("  S[Xm] = {:.4e}, closed form {:.4e}", f.correction0[(2, 2)], xm_correction_closed_form(&p));
    println!("  S[Pm] = {:.4e}, closed form {:.4e}", f.correction0[(3, 3)], pm_correction_closed_form(&p)?);
    Ok(())
}
