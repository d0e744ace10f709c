//! Configuration, parameter sweeps, figure presets and file output used by
//! the command-line tool.

pub mod commands;
pub mod config;
pub mod figures;
pub mod sweep;

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::{Error, Result};

pub use commands::{perturbation_table, steady_state_table, trajectory_table, Table};
pub use config::{
    load_config, parse_config, Axis, ModelKind, OutputFormat, RunConfig, Spacing, SystemKind,
};
pub use figures::{reproduce_figure, reproduce_with, Figure, FigureReport};
pub use sweep::{evaluate_point, format_sci, run_sweep, Cell, Observables, SweepRow, SweepTable};

/// Writes a header row and the rendered cells.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: &[Vec<Cell>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header.iter().map(|h| h.as_ref()))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::InvalidState(format!(
                "row has {} cells for {} columns",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub(crate) fn finite_or_null(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

/// Writes a sweep table in the configured format under the output directory.
pub fn write_table(table: &SweepTable, config: &RunConfig) -> Result<PathBuf> {
    Table::from(table).write(&config.output.dir, &config.output.name, config.output.format)
}
