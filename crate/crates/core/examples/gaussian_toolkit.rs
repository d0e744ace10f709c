//! Symplectic spectra, negativity and Duan sums of a few textbook states.

use optobae::gaussian::{
    duan_sum, log_negativity, purity, symplectic_eigenvalues, two_mode_squeezing_db,
};
use optobae::CovarianceMatrix;

fn main() -> optobae::Result<()> {
    let thermal = CovarianceMatrix::thermal(&[0.0, 2.0]);
    println!("thermal (0, 2): nu = {:?}", symplectic_eigenvalues(&thermal)?);
    println!("purity of the mechanical mode: {:.4}", purity(&thermal.reduced(&[1])?)?);

    println!("\n   r     E_N      duan    dB");
    for r in [0.0, 0.25, 0.5, 1.0] {
        let s = CovarianceMatrix::two_mode_squeezed(r);
        let d = duan_sum(&s, 0, 1)?;
        println!(
            "{r:5.2} {:7.4} {:8.4} {:6.2}",
            log_negativity(&s, &[0])?,
            d,
            two_mode_squeezing_db(d)?
        );
    }
    Ok(())
}
