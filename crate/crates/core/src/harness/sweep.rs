//! Parallel evaluation of a configured parameter grid.

use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::analytic::{adiabatic_variance, slow_cavity_variance, steady_state_rwa};
use crate::entanglement::{scan_state, ScanRow};
use crate::error::{Error, Result};
use crate::gaussian::{log_negativity, purity, squeezing_db, two_mode_squeezing_db};
use crate::model::build_model;
use crate::riccati::{periodic_steady_state, PeriodicSettings, PeriodicState};

use super::config::{MeasurementSection, RunConfig, SystemKind, SystemSection};

/// Observables of the cavity plus one mechanical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeObservables {
    pub var_xc_mean: f64,
    pub var_xc_min: f64,
    pub var_xc_max: f64,
    pub var_pc_mean: f64,
    pub var_xm_mean: f64,
    pub var_xm_min: f64,
    pub var_xm_max: f64,
    pub var_pm_mean: f64,
    /// Squeezing of the period-mean `Var(X_m)`.
    pub squeezing_db: f64,
    pub cavity_squeezing_db: f64,
    /// `E_N(c|m)` over one period.
    pub en_mean: f64,
    pub en_min: f64,
    pub en_max: f64,
    /// Purity of the period-mean mechanical state.
    pub purity_mech: f64,
    pub min_symplectic_eigenvalue: f64,
    /// Closed-form state without counter-rotating terms.
    pub var_xm_rwa: f64,
    pub var_pm_rwa: f64,
    pub en_rwa: f64,
    pub var_xm_adiabatic: f64,
    /// Infinite when the slow-cavity expression diverges (`η = 0` or `g = 0`).
    pub var_xm_slow: f64,
}

impl TwoModeObservables {
    pub const COLUMNS: [&'static str; 20] = [
        "var_xc_mean",
        "var_xc_min",
        "var_xc_max",
        "var_pc_mean",
        "var_xm_mean",
        "var_xm_min",
        "var_xm_max",
        "var_pm_mean",
        "squeezing_db",
        "cavity_squeezing_db",
        "en_mean",
        "en_min",
        "en_max",
        "purity_mech",
        "min_symplectic_eigenvalue",
        "var_xm_rwa",
        "var_pm_rwa",
        "en_rwa",
        "var_xm_adiabatic",
        "var_xm_slow",
    ];

    pub fn values(&self) -> [f64; 20] {
        [
            self.var_xc_mean,
            self.var_xc_min,
            self.var_xc_max,
            self.var_pc_mean,
            self.var_xm_mean,
            self.var_xm_min,
            self.var_xm_max,
            self.var_pm_mean,
            self.squeezing_db,
            self.cavity_squeezing_db,
            self.en_mean,
            self.en_min,
            self.en_max,
            self.purity_mech,
            self.min_symplectic_eigenvalue,
            self.var_xm_rwa,
            self.var_pm_rwa,
            self.en_rwa,
            self.var_xm_adiabatic,
            self.var_xm_slow,
        ]
    }

    pub fn from_state(sys: &SystemSection, state: &PeriodicState) -> Result<Self> {
        let p = sys.two_mode();
        let st = &state.stats;
        let mean = state.time_average();
        let mut en = Vec::with_capacity(state.samples.len());
        for (_, s) in &state.samples {
            en.push(log_negativity(s, &[0])?);
        }
        let exact = steady_state_rwa(&p)?.cm;
        Ok(Self {
            var_xc_mean: st.mean[(0, 0)],
            var_xc_min: st.min[(0, 0)],
            var_xc_max: st.max[(0, 0)],
            var_pc_mean: st.mean[(1, 1)],
            var_xm_mean: st.mean[(2, 2)],
            var_xm_min: st.min[(2, 2)],
            var_xm_max: st.max[(2, 2)],
            var_pm_mean: st.mean[(3, 3)],
            squeezing_db: squeezing_db(st.mean[(2, 2)])?,
            cavity_squeezing_db: squeezing_db(st.mean[(0, 0)])?,
            en_mean: en.iter().sum::<f64>() / en.len() as f64,
            en_min: en.iter().copied().fold(f64::INFINITY, f64::min),
            en_max: en.iter().copied().fold(0.0, f64::max),
            purity_mech: purity(&mean.reduced(&[1])?)?,
            min_symplectic_eigenvalue: state.min_symplectic_eigenvalue()?,
            var_xm_rwa: exact[(2, 2)],
            var_pm_rwa: exact[(3, 3)],
            en_rwa: log_negativity(&exact, &[0])?,
            var_xm_adiabatic: adiabatic_variance(&p)?,
            var_xm_slow: slow_cavity_variance(&p).unwrap_or(f64::INFINITY),
        })
    }
}

/// Observables of the cavity plus two mechanical modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeModeObservables {
    pub scan: ScanRow,
    pub var_xc_mean: f64,
    pub cavity_squeezing_db: f64,
    /// From the period-mean Duan sum.
    pub two_mode_squeezing_db: f64,
}

impl ThreeModeObservables {
    pub const NUMERIC_COLUMNS: [&'static str; 13] = [
        "en_a",
        "en_b1",
        "en_b2",
        "en_a_min",
        "en_b1_min",
        "en_b2_min",
        "duan_mean",
        "duan_min",
        "duan_violation",
        "two_mode_squeezing_db",
        "var_xc_mean",
        "cavity_squeezing_db",
        "min_symplectic_eigenvalue",
    ];

    pub fn values(&self) -> [f64; 13] {
        let s = &self.scan;
        [
            s.negativity[0],
            s.negativity[1],
            s.negativity[2],
            s.negativity_min[0],
            s.negativity_min[1],
            s.negativity_min[2],
            s.duan_mean,
            s.duan_min,
            if s.duan_violation { 1.0 } else { 0.0 },
            self.two_mode_squeezing_db,
            self.var_xc_mean,
            self.cavity_squeezing_db,
            s.min_symplectic_eigenvalue,
        ]
    }

    pub fn from_state(sys: &SystemSection, state: &PeriodicState) -> Result<Self> {
        let scan = scan_state(&sys.three_mode(), state)?;
        let var_xc = state.stats.mean[(0, 0)];
        Ok(Self {
            two_mode_squeezing_db: two_mode_squeezing_db(scan.duan_mean)?,
            scan,
            var_xc_mean: var_xc,
            cavity_squeezing_db: squeezing_db(var_xc)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observables {
    TwoMode(TwoModeObservables),
    ThreeMode(Box<ThreeModeObservables>),
    Failed,
}

/// A CSV/JSON cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
}

impl Cell {
    /// Numbers in scientific notation with 17 significant digits.
    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_sci(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x)
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(format_sci(*x))),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

pub fn format_sci(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    /// Values of the swept parameters in axis order.
    pub coordinates: Vec<f64>,
    pub observables: Observables,
    pub residual: f64,
    pub periods: usize,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn two_mode(&self) -> Option<&TwoModeObservables> {
        match &self.observables {
            Observables::TwoMode(o) => Some(o),
            _ => None,
        }
    }

    pub fn three_mode(&self) -> Option<&ThreeModeObservables> {
        match &self.observables {
            Observables::ThreeMode(o) => Some(o),
            _ => None,
        }
    }
}

/// Result of [`run_sweep`] with its column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub kind: SystemKind,
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn header(&self) -> Vec<String> {
        let mut h = self.axes.clone();
        match self.kind {
            SystemKind::TwoMode => h.extend(TwoModeObservables::COLUMNS.map(String::from)),
            SystemKind::ThreeMode => {
                h.push("class".into());
                h.push("class_min".into());
                h.extend(ThreeModeObservables::NUMERIC_COLUMNS.map(String::from));
            }
        }
        h.extend(["residual", "periods", "status"].map(String::from));
        h
    }

    pub fn cells(&self, row: &SweepRow) -> Vec<Cell> {
        let mut out: Vec<Cell> = row.coordinates.iter().map(|&x| Cell::Num(x)).collect();
        let nan = |n: usize| std::iter::repeat_n(Cell::Num(f64::NAN), n);
        match (self.kind, &row.observables) {
            (SystemKind::TwoMode, Observables::TwoMode(o)) => {
                out.extend(o.values().map(Cell::Num))
            }
            (SystemKind::ThreeMode, Observables::ThreeMode(o)) => {
                let label = |c: Option<_>| {
                    Cell::Text(c.map(|c: crate::entanglement::SeparabilityClass| c.to_string()).unwrap_or_default())
                };
                out.push(label(o.scan.class));
                out.push(label(o.scan.class_min));
                out.extend(o.values().map(Cell::Num));
            }
            (SystemKind::TwoMode, _) => out.extend(nan(TwoModeObservables::COLUMNS.len())),
            (SystemKind::ThreeMode, _) => {
                out.push(Cell::Text(String::new()));
                out.push(Cell::Text(String::new()));
                out.extend(nan(ThreeModeObservables::NUMERIC_COLUMNS.len()));
            }
        }
        out.push(Cell::Num(row.residual));
        out.push(Cell::Int(row.periods));
        out.push(Cell::Text(match &row.error {
            None => "ok".into(),
            Some(e) => format!("failed: {e}"),
        }));
        out
    }

    /// Rows as JSON objects keyed by column name.
    pub fn to_json(&self) -> Value {
        let header = self.header();
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = header
                        .iter()
                        .cloned()
                        .zip(self.cells(r).iter().map(Cell::to_json))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Periodic steady state of one system section.
pub fn steady_state_for(
    sys: &SystemSection,
    meas: &MeasurementSection,
    settings: &PeriodicSettings,
) -> Result<PeriodicState> {
    let model = match sys.kind {
        SystemKind::TwoMode => build_model(&sys.two_mode(), &meas.spec(sys.eta), sys.rwa())?,
        SystemKind::ThreeMode => build_model(&sys.three_mode(), &meas.spec(sys.eta), sys.rwa())?,
    };
    periodic_steady_state(&model, settings)
}

/// Full pipeline for one system section.
pub fn evaluate_point(
    sys: &SystemSection,
    meas: &MeasurementSection,
    settings: &PeriodicSettings,
) -> Result<(Observables, PeriodicState)> {
    let state = steady_state_for(sys, meas, settings)?;
    let obs = match sys.kind {
        SystemKind::TwoMode => Observables::TwoMode(TwoModeObservables::from_state(sys, &state)?),
        SystemKind::ThreeMode => {
            Observables::ThreeMode(Box::new(ThreeModeObservables::from_state(sys, &state)?))
        }
    };
    Ok((obs, state))
}

fn failed_row(coordinates: Vec<f64>, err: &Error) -> SweepRow {
    let (residual, periods) = match err {
        Error::NonConvergence { periods, residual } => (*residual, *periods),
        _ => (f64::NAN, 0),
    };
    SweepRow {
        coordinates,
        observables: Observables::Failed,
        residual,
        periods,
        error: Some(err.to_string()),
    }
}

/// Evaluates every grid point of `config` in parallel. Rows follow grid
/// order; per-point failures are kept as flagged rows.
pub fn run_sweep(config: &RunConfig) -> Result<SweepTable> {
    config.validate()?;
    let settings = config.integrator.periodic_settings();
    let rows = config
        .grid()
        .into_par_iter()
        .map(|point| {
            let sys = match config.system_at(&point) {
                Ok(s) => s,
                Err(e) => return failed_row(point, &e),
            };
            match evaluate_point(&sys, &config.measurement, &settings) {
                Ok((observables, state)) => SweepRow {
                    coordinates: point,
                    observables,
                    residual: state.residual,
                    periods: state.periods,
                    error: None,
                },
                Err(e) => failed_row(point, &e),
            }
        })
        .collect();
    Ok(SweepTable {
        kind: config.system.kind,
        axes: config.axis_names(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{parse_config, Axis, ModelKind};

    #[test]
    fn single_point_matches_direct_evaluation() {
        let cfg = RunConfig::default();
        let table = run_sweep(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        let (obs, _) = evaluate_point(
            &cfg.system,
            &cfg.measurement,
            &cfg.integrator.periodic_settings(),
        )
        .unwrap();
        assert_eq!(table.rows[0].observables, obs);
        let o = table.rows[0].two_mode().unwrap();
        assert!((o.var_xm_mean / o.var_xm_rwa - 1.0).abs() < 1e-6);
        assert_eq!(table.header().len(), table.cells(&table.rows[0]).len());
    }

    #[test]
    fn failures_are_flagged_rows() {
        let mut cfg = parse_config("[integrator]\nmax_periods = 1\n").unwrap();
        cfg.system.model = ModelKind::Full;
        cfg.sweep.axis = vec![Axis::list("g", &[0.05, 0.1])];
        let table = run_sweep(&cfg).unwrap();
        assert_eq!(table.rows.len(), 2);
        for r in &table.rows {
            assert!(r.failed());
            let cells = table.cells(r);
            assert!(cells.last().unwrap().render().starts_with("failed"));
        }
        assert_eq!(table.rows[1].coordinates, vec![0.1]);
    }

    #[test]
    fn three_mode_columns() {
        let cfg = parse_config(
            "[system]\nkind = \"three-mode\"\nmodel = \"full\"\ng = 0.3\nkappa = 0.3\n",
        )
        .unwrap();
        let table = run_sweep(&cfg).unwrap();
        let cells = table.cells(&table.rows[0]);
        assert_eq!(cells.len(), table.header().len());
        assert_eq!(cells[0].render(), "fully-inseparable");
        let json = table.to_json();
        assert_eq!(json[0]["class"], "fully-inseparable");
    }

    #[test]
    fn number_format() {
        assert_eq!(format_sci(0.5), "5.0000000000000000e-1");
        let x = 0.1 + 0.2;
        assert_eq!(format_sci(x).parse::<f64>().unwrap(), x);
        assert_eq!(format_sci(f64::NAN), "NaN");
    }
}
