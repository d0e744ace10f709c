//! Table builders behind the command-line subcommands.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde_json::{json, Map, Value};

use crate::entanglement::classify_three_mode;
use crate::error::{Error, Result};
use crate::floquet::{
    fourier_expansion, pm_correction_closed_form, xm_correction_closed_form, Sigma1Form,
};
use crate::gaussian::min_symplectic_eigenvalue;
use crate::linalg::{max_abs, upper_indices};
use crate::model::{build_model, ModelMatrices};
use crate::riccati::{sample_trajectory, DiagnosticCurrent, SigmaSchedule};

use super::config::{OutputFormat, RunConfig, SystemKind};
use super::sweep::{steady_state_for, Cell, SweepTable};
use super::{finite_or_null, write_csv, write_json};

/// Column names plus rows of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let m: Map<String, Value> = self
                        .header
                        .iter()
                        .cloned()
                        .zip(r.iter().map(Cell::to_json))
                        .collect();
                    Value::Object(m)
                })
                .collect(),
        )
    }

    /// Writes `<dir>/<stem>.csv` or `<dir>/<stem>.json`.
    pub fn write(&self, dir: &Path, stem: &str, format: OutputFormat) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        match format {
            OutputFormat::Csv => {
                let path = dir.join(format!("{stem}.csv"));
                write_csv(&path, &self.header, &self.rows)?;
                Ok(path)
            }
            OutputFormat::Json => {
                let path = dir.join(format!("{stem}.json"));
                write_json(&path, &self.to_json())?;
                Ok(path)
            }
        }
    }
}

impl From<&SweepTable> for Table {
    fn from(t: &SweepTable) -> Self {
        Self {
            header: t.header(),
            rows: t.rows.iter().map(|r| t.cells(r)).collect(),
        }
    }
}

fn model_for(config: &RunConfig) -> Result<ModelMatrices> {
    let s = &config.system;
    let spec = config.measurement.spec(s.eta);
    match s.kind {
        SystemKind::TwoMode => build_model(&s.two_mode(), &spec, s.rwa()),
        SystemKind::ThreeMode => build_model(&s.three_mode(), &spec, s.rwa()),
    }
}

fn entry_names(dim: usize) -> Vec<String> {
    upper_indices(dim)
        .into_iter()
        .map(|(i, j)| format!("s{}{}", i + 1, j + 1))
        .collect()
}

/// One period of the periodic steady state at the base point: time and the
/// upper triangle of `σ(t)`. The summary carries convergence data.
pub fn steady_state_table(config: &RunConfig) -> Result<(Table, Value)> {
    config.validate()?;
    let state = steady_state_for(
        &config.system,
        &config.measurement,
        &config.integrator.periodic_settings(),
    )?;
    let dim = state.samples[0].1.dim();
    let mut header = vec!["time".to_string()];
    header.extend(entry_names(dim));
    let idx = upper_indices(dim);
    let rows = state
        .samples
        .iter()
        .map(|(phase, s)| {
            let mut row = vec![Cell::Num(phase * state.period)];
            row.extend(idx.iter().map(|&(i, j)| Cell::Num(s[(i, j)])));
            row
        })
        .collect();
    let mean = &state.stats.mean;
    let mut summary = json!({
        "residual": state.residual,
        "periods": state.periods,
        "period": state.period,
        "min_symplectic_eigenvalue": state.min_symplectic_eigenvalue()?,
        "mean_diagonal": mean.diagonal().iter().copied().collect::<Vec<_>>(),
    });
    if config.system.kind == SystemKind::ThreeMode {
        let r = classify_three_mode(&state.time_average(), Some(config.system.three_mode()))?;
        summary["class"] = json!(r.class.to_string());
        summary["negativity"] = json!(r.bipartition_negativity);
        summary["duan"] = json!(r.duan_value);
    }
    Ok((Table { header, rows }, summary))
}

/// Second-order Floquet prediction of the period-mean state against the
/// numerical one, entry by entry. Two-mode only.
pub fn perturbation_table(config: &RunConfig) -> Result<(Table, Value)> {
    config.validate()?;
    if config.system.kind != SystemKind::TwoMode {
        return Err(Error::invalid("perturb needs the two-mode system"));
    }
    let p = config.system.two_mode();
    let expansion = fourier_expansion(&p, Sigma1Form::Printed)?;
    let mut sys = config.system;
    sys.model = super::config::ModelKind::Full;
    let state = steady_state_for(&sys, &config.measurement, &config.integrator.periodic_settings())?;
    let numeric = &state.stats.mean;
    let s0 = expansion.sigma0.matrix();
    let predicted = s0 + &expansion.correction0;

    let header = ["i", "j", "sigma0", "correction", "predicted", "numeric_mean", "error"]
        .map(String::from)
        .to_vec();
    let rows = upper_indices(4)
        .into_iter()
        .map(|(i, j)| {
            vec![
                Cell::Int(i + 1),
                Cell::Int(j + 1),
                Cell::Num(s0[(i, j)]),
                Cell::Num(expansion.correction0[(i, j)]),
                Cell::Num(predicted[(i, j)]),
                Cell::Num(numeric[(i, j)]),
                Cell::Num(predicted[(i, j)] - numeric[(i, j)]),
            ]
        })
        .collect();
    let summary = json!({
        "max_error_zeroth_order": max_abs(&(s0 - numeric)),
        "max_error_second_order": max_abs(&(&predicted - numeric)),
        "xm_correction": expansion.correction0[(2, 2)],
        "xm_correction_closed_form": xm_correction_closed_form(&p),
        "pm_correction": expansion.correction0[(3, 3)],
        "pm_correction_closed_form": pm_correction_closed_form(&p)?,
        "residual": state.residual,
        "periods": state.periods,
    });
    Ok((Table { header, rows }, summary))
}

/// One conditional trajectory of the means, started at zero on the periodic
/// steady state. Columns: time, means, innovation increments per channel,
/// and for the two-mode system the fast-cavity current `I dt`.
pub fn trajectory_table(config: &RunConfig, seed: u64) -> Result<(Table, Value)> {
    config.validate()?;
    let model = model_for(config)?;
    let state = steady_state_for(
        &config.system,
        &config.measurement,
        &config.integrator.periodic_settings(),
    )?;
    let min_nu = min_symplectic_eigenvalue(&state.time_average())?;
    let schedule = SigmaSchedule::Periodic(state);
    let diagnostic = match config.system.kind {
        SystemKind::TwoMode => Some(DiagnosticCurrent::fast_cavity(&config.system.two_mode())),
        SystemKind::ThreeMode => None,
    };
    let dim = model.dim();
    let rec = sample_trajectory(
        &model,
        &schedule,
        &DVector::zeros(dim),
        seed,
        config.integrator.sde_dt,
        config.integrator.t_end,
        diagnostic,
    )?;

    let mut header = vec!["time".to_string()];
    header.extend((0..dim).map(|k| format!("mean_{k}")));
    let channels = rec.currents.first().map_or(0, |c| c.len());
    header.extend((0..channels).map(|k| format!("dw_{k}")));
    if rec.diagnostic_current.is_some() {
        header.push("current_dt".into());
    }
    let mut rows = Vec::with_capacity(rec.times.len());
    for (k, t) in rec.times.iter().enumerate() {
        let mut row = vec![Cell::Num(*t)];
        row.extend(rec.means[k].iter().map(|&x| Cell::Num(x)));
        // increments belong to the step ending at `t`
        let inc = k.checked_sub(1);
        for c in 0..channels {
            row.push(Cell::Num(inc.map_or(0.0, |i| rec.currents[i][c])));
        }
        if let Some(cur) = &rec.diagnostic_current {
            row.push(Cell::Num(inc.map_or(0.0, |i| cur[i])));
        }
        rows.push(row);
    }
    let summary = json!({
        "seed": rec.seed,
        "dt": rec.dt,
        "steps": rec.times.len() - 1,
        "min_symplectic_eigenvalue": finite_or_null(min_nu),
    });
    Ok((Table { header, rows }, summary))
}
