//! Stochastic conditional means on the stationary conditional state and the
//! law of total variance against the unconditional Lyapunov solution.

use nalgebra::DVector;
use optobae::analytic::steady_state_rwa;
use optobae::model::build_homodyne_model;
use optobae::riccati::{
    ensemble_final_means, lyapunov_steady_state, sample_covariance, sample_trajectory,
    DiagnosticCurrent, SigmaSchedule,
};
use optobae::TwoModeParams;

fn main() -> optobae::Result<()> {
    let p = TwoModeParams::new(0.05, 0.2, 0.05, 2.0, 1.0);
    let model = build_homodyne_model(&p, true)?;
    let cond = steady_state_rwa(&p)?.cm;
    let schedule = SigmaSchedule::Constant(cond.clone());
    let x0 = DVector::zeros(4);

    let rec = sample_trajectory(&model, &schedule, &x0, 7, 0.01, 20.0,
        Some(DiagnosticCurrent::fast_cavity(&p)))?;
    println!("t      <Xm>      <Pm>");
    for k in (0..rec.times.len()).step_by(400) {
        println!("{:5.1}  {:8.4}  {:8.4}", rec.times[k], rec.means[k][2], rec.means[k][3]);
    }

    let finals = ensemble_final_means(&model, &schedule, &x0, 1000, 2000, 0.01, 100.0)?;
    let total = sample_covariance(&finals)? + cond.matrix();
    let uncond = lyapunov_steady_state(&model.drift(0.0), model.diffusion())?;
    println!("\nVar(Xm): ensemble + conditional = {:.4}, unconditional = {:.4}",
        total[(2, 2)], uncond[(2, 2)]);
    println!("Var(Pm): ensemble + conditional = {:.4}, unconditional = {:.4}",
        total[(3, 3)], uncond[(3, 3)]);
    Ok(())
}
