//! Presets that regenerate the data behind each figure panel.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::gaussian::log_negativity;

use super::config::{Axis, ModelKind, RunConfig, Spacing, SystemKind};
use super::sweep::{run_sweep, steady_state_for, Cell, SweepRow, SweepTable};
use super::{finite_or_null, write_csv, write_json};

const CURVE_GS: [f64; 3] = [0.01, 0.05, 0.3];
const INSET_POINT: (f64, f64) = (0.05, 0.05);
const INSET_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig2,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
    Fig4a,
    Fig4b,
    Fig4c,
}

impl Figure {
    pub const ALL: [Figure; 8] = [
        Figure::Fig2,
        Figure::Fig3a,
        Figure::Fig3b,
        Figure::Fig3c,
        Figure::Fig3d,
        Figure::Fig4a,
        Figure::Fig4b,
        Figure::Fig4c,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3a => "fig3a",
            Figure::Fig3b => "fig3b",
            Figure::Fig3c => "fig3c",
            Figure::Fig3d => "fig3d",
            Figure::Fig4a => "fig4a",
            Figure::Fig4b => "fig4b",
            Figure::Fig4c => "fig4c",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Figure::Fig2 => "mechanical squeezing without counter-rotating terms, with limits",
            Figure::Fig3a => "mechanical squeezing with counter-rotating terms",
            Figure::Fig3b => "cavity-mechanics log negativity",
            Figure::Fig3c => "conditional cavity squeezing",
            Figure::Fig3d => "log negativity, small-kappa zoom",
            Figure::Fig4a => "mechanical two-mode squeezing",
            Figure::Fig4b => "three-mode inseparability map, nbar = 10",
            Figure::Fig4c => "three-mode inseparability map, nbar = 100",
        }
    }

    /// Column names of the main CSV.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Figure::Fig2 => &[
                "kappa_over_omega",
                "g_over_omega",
                "var_xm_exact",
                "var_xm_numeric",
                "var_xm_adiabatic",
                "var_xm_slow",
                "squeezing_db",
            ],
            Figure::Fig3a => &[
                "kappa_over_omega",
                "g_over_omega",
                "var_xm_rwa",
                "var_xm_mean",
                "var_xm_min",
                "var_xm_max",
                "squeezing_db_rwa",
                "squeezing_db_mean",
                "squeezing_db_min",
                "squeezing_db_max",
                "squeezing_db_adiabatic",
            ],
            Figure::Fig3b | Figure::Fig3d => &[
                "kappa_over_omega",
                "g_over_omega",
                "E_N_rwa",
                "E_N_full_mean",
                "E_N_full_min",
                "E_N_full_max",
            ],
            Figure::Fig3c => &[
                "kappa_over_omega",
                "g_over_omega",
                "var_xc_rwa",
                "var_xc_mean",
                "var_xc_min",
                "var_xc_max",
                "cavity_squeezing_db_mean",
                "cavity_squeezing_db_min",
                "cavity_squeezing_db_max",
            ],
            Figure::Fig4a => &[
                "kappa_over_omega",
                "g_over_omega",
                "two_mode_squeezing_db_rwa",
                "two_mode_squeezing_db_mean",
                "two_mode_squeezing_db_max",
                "duan_mean",
                "duan_min",
                "cavity_squeezing_db",
            ],
            Figure::Fig4b | Figure::Fig4c => &[
                "kappa_over_omega",
                "g_over_omega",
                "class_label",
                "class_min_label",
                "E_N_a",
                "E_N_b1",
                "E_N_b2",
                "duan_value",
                "duan_violation",
            ],
        }
    }

    /// Default run configuration of the preset.
    pub fn config(self) -> RunConfig {
        let mut c = RunConfig::default();
        c.output.name = self.name().into();
        let curves = |lo: f64, hi: f64| {
            vec![
                Axis::list("g", &CURVE_GS),
                Axis::range("kappa", lo, hi, 60, Spacing::Log),
            ]
        };
        match self {
            Figure::Fig2 => {
                c.sweep.axis = curves(1e-3, 1e2);
            }
            Figure::Fig3a | Figure::Fig3b | Figure::Fig3c => {
                c.system.model = ModelKind::Full;
                c.sweep.axis = curves(1e-3, 1e2);
            }
            Figure::Fig3d => {
                c.system.model = ModelKind::Full;
                c.sweep.axis = curves(1e-2, 1.0);
            }
            Figure::Fig4a => {
                c.system.kind = SystemKind::ThreeMode;
                c.system.model = ModelKind::Full;
                c.sweep.axis = curves(1e-3, 1e2);
            }
            Figure::Fig4b | Figure::Fig4c => {
                c.system.kind = SystemKind::ThreeMode;
                c.system.model = ModelKind::Full;
                if self == Figure::Fig4c {
                    c.system.nbar = 100.0;
                }
                c.sweep.axis = vec![
                    Axis::range("g", 0.01, 0.5, 40, Spacing::Log),
                    Axis::range("kappa", 1e-3, 1e1, 40, Spacing::Log),
                ];
            }
        }
        c
    }

    /// Preset choices not pinned down by the figure captions.
    fn estimates(self) -> Vec<&'static str> {
        match self {
            Figure::Fig3d => vec!["kappa range [1e-2, 1] of the zoom is an estimate"],
            Figure::Fig4a => vec!["adiabatic-limit curves are not generated"],
            Figure::Fig4b | Figure::Fig4c => vec![
                "kappa range [1e-3, 1e1] is an estimate read off the axes",
                "g range [0.01, 0.5] is an estimate read off the axes",
            ],
            _ => vec![],
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Figure::ALL.iter().map(|f| f.name()).collect();
                Error::invalid(format!(
                    "unknown figure `{s}`; valid names: {}",
                    names.join(", ")
                ))
            })
    }
}

/// Files written by one preset plus the manifest contents.
#[derive(Debug, Clone)]
pub struct FigureReport {
    pub figure: Figure,
    pub files: Vec<PathBuf>,
    pub manifest: Value,
    /// Every computed sweep table, for inspection.
    pub tables: Vec<SweepTable>,
}

impl FigureReport {
    /// Smallest symplectic eigenvalue across all successful points.
    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        min_symplectic(&self.tables)
    }
}

fn min_symplectic(tables: &[SweepTable]) -> f64 {
    tables
        .iter()
        .flat_map(|t| &t.rows)
        .filter_map(|r| {
            r.two_mode()
                .map(|o| o.min_symplectic_eigenvalue)
                .or_else(|| r.three_mode().map(|o| o.scan.min_symplectic_eigenvalue))
        })
        .fold(f64::INFINITY, f64::min)
}

fn coord(table: &SweepTable, row: &SweepRow, name: &str, fallback: f64) -> f64 {
    table
        .axes
        .iter()
        .position(|a| a == name)
        .map(|i| row.coordinates[i])
        .unwrap_or(fallback)
}

fn db(var: f64) -> f64 {
    -10.0 * (2.0 * var).log10()
}

fn figure_cells(fig: Figure, config: &RunConfig, main: &SweepTable, rwa: Option<&SweepTable>) -> Vec<Vec<Cell>> {
    let mut out = Vec::with_capacity(main.rows.len());
    for (i, row) in main.rows.iter().enumerate() {
        let k = coord(main, row, "kappa", config.system.kappa);
        let g = coord(main, row, "g", config.system.g);
        let mut cells = vec![Cell::Num(k), Cell::Num(g)];
        let n = fig.columns().len() - 2;
        let vals: Option<Vec<Cell>> = match fig {
            Figure::Fig2 => row.two_mode().map(|o| {
                [
                    o.var_xm_rwa,
                    o.var_xm_mean,
                    o.var_xm_adiabatic,
                    o.var_xm_slow,
                    o.squeezing_db,
                ]
                .map(Cell::Num)
                .to_vec()
            }),
            Figure::Fig3a => row.two_mode().map(|o| {
                [
                    o.var_xm_rwa,
                    o.var_xm_mean,
                    o.var_xm_min,
                    o.var_xm_max,
                    db(o.var_xm_rwa),
                    o.squeezing_db,
                    db(o.var_xm_max),
                    db(o.var_xm_min),
                    db(o.var_xm_adiabatic),
                ]
                .map(Cell::Num)
                .to_vec()
            }),
            Figure::Fig3b | Figure::Fig3d => row.two_mode().map(|o| {
                [o.en_rwa, o.en_mean, o.en_min, o.en_max].map(Cell::Num).to_vec()
            }),
            Figure::Fig3c => row.two_mode().map(|o| {
                [
                    0.5,
                    o.var_xc_mean,
                    o.var_xc_min,
                    o.var_xc_max,
                    o.cavity_squeezing_db,
                    db(o.var_xc_max),
                    db(o.var_xc_min),
                ]
                .map(Cell::Num)
                .to_vec()
            }),
            Figure::Fig4a => row.three_mode().map(|o| {
                let rwa_db = rwa
                    .and_then(|t| t.rows.get(i))
                    .and_then(|r| r.three_mode())
                    .map(|r| r.two_mode_squeezing_db)
                    .unwrap_or(f64::NAN);
                [
                    rwa_db,
                    o.two_mode_squeezing_db,
                    -10.0 * o.scan.duan_min.log10(),
                    o.scan.duan_mean,
                    o.scan.duan_min,
                    o.cavity_squeezing_db,
                ]
                .map(Cell::Num)
                .to_vec()
            }),
            Figure::Fig4b | Figure::Fig4c => row.three_mode().map(|o| {
                let s = &o.scan;
                let label = |c: Option<crate::entanglement::SeparabilityClass>| {
                    Cell::Text(c.map(|c| c.to_string()).unwrap_or_default())
                };
                vec![
                    label(s.class),
                    label(s.class_min),
                    Cell::Num(s.negativity[0]),
                    Cell::Num(s.negativity[1]),
                    Cell::Num(s.negativity[2]),
                    Cell::Num(s.duan_mean),
                    Cell::Int(s.duan_violation as usize),
                ]
            }),
        };
        match vals {
            Some(v) => cells.extend(v),
            None if matches!(fig, Figure::Fig4b | Figure::Fig4c) => {
                cells.push(Cell::Text("failed".into()));
                cells.push(Cell::Text("failed".into()));
                cells.extend((0..n - 2).map(|_| Cell::Num(f64::NAN)));
            }
            None => cells.extend((0..n).map(|_| Cell::Num(f64::NAN))),
        }
        out.push(cells);
    }
    out
}

fn convergence_stats(tables: &[SweepTable]) -> Value {
    let rows: Vec<&SweepRow> = tables.iter().flat_map(|t| &t.rows).collect();
    let ok: Vec<&&SweepRow> = rows.iter().filter(|r| !r.failed()).collect();
    let failed: Vec<Value> = rows
        .iter()
        .filter(|r| r.failed())
        .map(|r| json!({ "coordinates": r.coordinates, "error": r.error }))
        .collect();
    json!({
        "points": rows.len(),
        "failed": failed.len(),
        "failures": failed,
        "max_residual": ok.iter().map(|r| r.residual).fold(0.0, f64::max),
        "max_periods": ok.iter().map(|r| r.periods).max().unwrap_or(0),
        "mean_periods": if ok.is_empty() { 0.0 } else {
            ok.iter().map(|r| r.periods as f64).sum::<f64>() / ok.len() as f64
        },
    })
}

/// Runs `fig` with its preset configuration.
pub fn reproduce_figure(fig: Figure, out_dir: &Path) -> Result<FigureReport> {
    reproduce_with(fig, &fig.config(), out_dir)
}

/// Runs `fig` with a custom configuration, e.g. a coarser grid. Writes
/// `<name>.csv`, any companion CSV, and `<name>.manifest.json` into `out_dir`.
pub fn reproduce_with(fig: Figure, config: &RunConfig, out_dir: &Path) -> Result<FigureReport> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let main = run_sweep(config)?;
    let rwa = if fig == Figure::Fig4a {
        let mut c = config.clone();
        c.system.model = ModelKind::Rwa;
        Some(run_sweep(&c)?)
    } else {
        None
    };

    let mut files = Vec::new();
    let path = out_dir.join(format!("{}.csv", config.output.name));
    write_csv(&path, fig.columns(), &figure_cells(fig, config, &main, rwa.as_ref()))?;
    files.push(path);

    let mut tables = vec![main];
    tables.extend(rwa);
    if fig == Figure::Fig3b {
        let (path, table) = write_inset(config, out_dir)?;
        files.push(path);
        tables.push(table);
    }

    let manifest = json!({
        "figure": fig.name(),
        "description": fig.description(),
        "files": files.iter().map(|p| p.file_name().map(|s| s.to_string_lossy().into_owned())).collect::<Vec<_>>(),
        "columns": fig.columns(),
        "config": serde_json::to_value(config).map_err(|e| Error::Io(e.to_string()))?,
        "estimates": fig.estimates(),
        "code_version": env!("CARGO_PKG_VERSION"),
        "runtime_seconds": start.elapsed().as_secs_f64(),
        "timestamp_unix": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        "threads": rayon::current_num_threads(),
        "convergence": convergence_stats(&tables),
        "min_symplectic_eigenvalue": finite_or_null(min_symplectic(&tables)),
    });
    let mpath = out_dir.join(format!("{}.manifest.json", config.output.name));
    write_json(&mpath, &manifest)?;
    files.push(mpath);

    Ok(FigureReport {
        figure: fig,
        files,
        manifest,
        tables,
    })
}

/// One steady-state period of `E_N(c|m)` at the inset point.
fn write_inset(config: &RunConfig, out_dir: &Path) -> Result<(PathBuf, SweepTable)> {
    let mut sys = config.system;
    sys.kind = SystemKind::TwoMode;
    sys.model = ModelKind::Full;
    (sys.g, sys.kappa) = INSET_POINT;
    let mut settings = config.integrator.periodic_settings();
    settings.samples_per_period = INSET_SAMPLES;
    let state = steady_state_for(&sys, &config.measurement, &settings)?;

    let mut rows = Vec::with_capacity(state.samples.len());
    for (phase, s) in &state.samples {
        rows.push(vec![
            Cell::Num(phase * state.period),
            Cell::Num(log_negativity(s, &[0])?),
            Cell::Num(s[(2, 2)]),
            Cell::Num(s[(0, 0)]),
        ]);
    }
    let path = out_dir.join(format!("{}_inset.csv", config.output.name));
    write_csv(&path, &["time", "E_N", "var_xm", "var_xc"], &rows)?;

    let obs = super::sweep::TwoModeObservables::from_state(&sys, &state)?;
    let table = SweepTable {
        kind: SystemKind::TwoMode,
        axes: vec![],
        rows: vec![SweepRow {
            coordinates: vec![],
            observables: super::sweep::Observables::TwoMode(obs),
            residual: state.residual,
            periods: state.periods,
            error: None,
        }],
    };
    Ok((path, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        for f in Figure::ALL {
            assert_eq!(f.name().parse::<Figure>().unwrap(), f);
        }
        let err = "fig5".parse::<Figure>().unwrap_err().to_string();
        assert!(err.contains("fig5") && err.contains("fig3d") && err.contains("fig4c"));
    }

    #[test]
    fn fig4_presets_differ_only_in_nbar() {
        let mut b = Figure::Fig4b.config();
        let c = Figure::Fig4c.config();
        assert_eq!(b.system.nbar, 10.0);
        assert_eq!(c.system.nbar, 100.0);
        b.system.nbar = 100.0;
        b.output.name = c.output.name.clone();
        assert_eq!(b, c);
        assert_eq!(c.grid().len(), 1600);
    }

    #[test]
    fn presets_are_valid() {
        for f in Figure::ALL {
            f.config().validate().unwrap();
        }
        assert_eq!(Figure::Fig2.config().grid().len(), 180);
    }
}
