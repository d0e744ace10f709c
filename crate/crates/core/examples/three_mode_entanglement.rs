//! Separability structure of the cavity plus two mechanical modes along a
//! cut in kappa, for two bath occupancies.

use optobae::entanglement::{scan_region, ScanGrid, ScanOptions};
use optobae::ThreeModeParams;

fn main() -> optobae::Result<()> {
    let kappas: Vec<f64> = (0..9).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect();
    for nbar in [10.0, 100.0] {
        let base = ThreeModeParams { nbar, ..Default::default() };
        let grid = ScanGrid { kappas: kappas.clone(), gs: vec![0.01, 0.3] };
        let rows = scan_region(&grid, &base, &ScanOptions::default())?;
        println!("nbar = {nbar}");
        for r in rows {
            let class = r.class.map(|c| c.to_string()).unwrap_or_else(|| "failed".into());
            println!(
                "  g = {:4.2}  kappa = {:8.2e}  duan = {:7.4}  {class}",
                r.g, r.kappa, r.duan_mean
            );
        }
    }
    Ok(())
}
