//! Parameter sweep driven by a TOML document, written as CSV.

use optobae::harness::{parse_config, run_sweep, write_table};

const CONFIG: &str = r#"
[system]
model = "full"
g = 0.05

[[sweep.axis]]
parameter = "kappa"
min = 1e-2
max = 1.0
count = 9
spacing = "log"

[output]
dir = "target/sweep-example"
name = "kappa_cut"
"#;

fn main() -> optobae::Result<()> {
    let config = parse_config(CONFIG)?;
    let table = run_sweep(&config)?;
    for row in &table.rows {
        if let Some(o) = row.two_mode() {
            println!(
                "kappa = {:8.3e}  squeezing {:6.2} dB (rwa {:6.2} dB)  E_N = {:.4}",
                row.coordinates[0],
                o.squeezing_db,
                -10.0 * (2.0 * o.var_xm_rwa).log10(),
                o.en_mean
            );
        }
    }
    let path = write_table(&table, &config)?;
    println!("wrote {}", path.display());
    Ok(())
}
