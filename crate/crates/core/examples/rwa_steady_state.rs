//! Closed-form conditional state without counter-rotating terms, checked
//! against the Riccati flow, with the adiabatic and slow-cavity limits.

use optobae::analytic::{
    adiabatic_variance, cooperativity, kappa_opt, slow_cavity_variance, steady_state_rwa,
};
use optobae::gaussian::squeezing_db;
use optobae::model::build_homodyne_model;
use optobae::riccati::{periodic_steady_state, PeriodicSettings};
use optobae::TwoModeParams;

fn main() -> optobae::Result<()> {
    let base = TwoModeParams::new(0.05, 0.1, 1e-4, 10.0, 1.0);
    let exact = steady_state_rwa(&base)?;
    let model = build_homodyne_model(&base, true)?;
    let num = periodic_steady_state(&model, &PeriodicSettings::default())?;
    println!("C = {:.3e}", exact.cooperativity);
    println!("analytic:\n{}", exact.cm.matrix());
    println!(
        "max deviation of the Riccati fixed point: {:.2e} ({} period maps)",
        num.time_average().max_abs_diff(&exact.cm),
        num.periods
    );

    let ko = kappa_opt(&base)?;
    println!("\nkappa_opt = {ko:.4}");
    println!("  kappa     exact[dB]  adiabatic  slow");
    for k in [1e-3, 1e-2, ko, 1.0, 10.0] {
        let p = TwoModeParams { kappa: k, ..base };
        let v = steady_state_rwa(&p)?.cm[(2, 2)];
        println!(
            "{k:9.3e}  {:8.3}  {:9.3}  {:6.3}   C = {:.1e}",
            squeezing_db(v)?,
            squeezing_db(adiabatic_variance(&p)?)?,
            squeezing_db(slow_cavity_variance(&p)?)?,
            cooperativity(&p)
        );
    }
    Ok(())
}
