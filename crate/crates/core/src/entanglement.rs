//! PPT-based separability structure of the cavity plus two mechanical modes.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{duan_sum, log_negativity, CovarianceMatrix};
use crate::model::{build_homodyne_model, ThreeModeParams};
use crate::riccati::{periodic_steady_state, PeriodicSettings, PeriodicState};

/// Negativities at or below this value count as PPT.
pub const NPT_THRESHOLD: f64 = 1e-10;

/// Mode labels in quadrature order: cavity `a`, mechanics `b₁`, `b₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    A,
    B1,
    B2,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::A, Mode::B1, Mode::B2];

    pub fn index(self) -> usize {
        self as usize
    }

    fn label(self) -> &'static str {
        match self {
            Mode::A => "a",
            Mode::B1 => "b1",
            Mode::B2 => "b2",
        }
    }
}

/// Class of a three-mode state from its three `1|2` bipartitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeparabilityClass {
    /// NPT across every bipartition.
    FullyInseparable,
    /// PPT only across `(x | rest)`.
    OneModeBiseparable(Mode),
    /// NPT only across `(x | rest)`.
    TwoModeBiseparable(Mode),
    /// PPT across every bipartition; separable or bound entangled.
    PptWrtAll,
}

impl fmt::Display for SeparabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FullyInseparable => f.write_str("fully-inseparable"),
            Self::OneModeBiseparable(m) => write!(f, "one-mode-biseparable({})", m.label()),
            Self::TwoModeBiseparable(m) => write!(f, "two-mode-biseparable({})", m.label()),
            Self::PptWrtAll => f.write_str("ppt-wrt-all"),
        }
    }
}

/// Class as a pure function of the negativities of `(a|b₁b₂)`, `(b₁|ab₂)`, `(b₂|ab₁)`.
pub fn class_from_negativities(en: [f64; 3]) -> SeparabilityClass {
    let npt: Vec<Mode> = Mode::ALL
        .into_iter()
        .filter(|m| en[m.index()] > NPT_THRESHOLD)
        .collect();
    match npt.len() {
        3 => SeparabilityClass::FullyInseparable,
        2 => {
            let ppt = Mode::ALL.into_iter().find(|m| !npt.contains(m)).unwrap_or(Mode::A);
            SeparabilityClass::OneModeBiseparable(ppt)
        }
        1 => SeparabilityClass::TwoModeBiseparable(npt[0]),
        _ => SeparabilityClass::PptWrtAll,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityReport {
    /// `E_N` for `(a|b₁b₂)`, `(b₁|ab₂)`, `(b₂|ab₁)`.
    pub bipartition_negativity: [f64; 3],
    /// Duan sum of the mechanical pair.
    pub duan_value: f64,
    pub class: SeparabilityClass,
    pub parameters: Option<ThreeModeParams>,
}

fn negativities(sigma: &CovarianceMatrix) -> Result<[f64; 3]> {
    Ok([
        log_negativity(sigma, &[0])?,
        log_negativity(sigma, &[1])?,
        log_negativity(sigma, &[2])?,
    ])
}

pub fn classify_three_mode(
    sigma: &CovarianceMatrix,
    params: Option<ThreeModeParams>,
) -> Result<SeparabilityReport> {
    if sigma.n_modes() != 3 {
        return Err(Error::invalid(format!(
            "classification needs 3 modes, got {}",
            sigma.n_modes()
        )));
    }
    let en = negativities(sigma)?;
    Ok(SeparabilityReport {
        bipartition_negativity: en,
        duan_value: duan_sum(sigma, 1, 2)?,
        class: class_from_negativities(en),
        parameters: params,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub kappas: Vec<f64>,
    pub gs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub rwa: bool,
    pub settings: PeriodicSettings,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            rwa: false,
            settings: PeriodicSettings::default(),
        }
    }
}

/// One grid point. Failed points carry `error` and NaN observables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub kappa: f64,
    pub g: f64,
    /// Class of the period-averaged state.
    pub class: Option<SeparabilityClass>,
    /// Class from the per-bipartition minimum of `E_N` over the period.
    pub class_min: Option<SeparabilityClass>,
    pub negativity: [f64; 3],
    pub negativity_min: [f64; 3],
    pub duan_mean: f64,
    pub duan_min: f64,
    pub duan_violation: bool,
    pub min_symplectic_eigenvalue: f64,
    pub residual: f64,
    pub periods: usize,
    pub error: Option<String>,
}

impl ScanRow {
    pub fn failed(kappa: f64, g: f64, err: &Error) -> Self {
        Self {
            kappa,
            g,
            class: None,
            class_min: None,
            negativity: [f64::NAN; 3],
            negativity_min: [f64::NAN; 3],
            duan_mean: f64::NAN,
            duan_min: f64::NAN,
            duan_violation: false,
            min_symplectic_eigenvalue: f64::NAN,
            residual: f64::NAN,
            periods: 0,
            error: Some(err.to_string()),
        }
    }
}

/// Periodic steady state and classification of a single parameter point.
pub fn scan_point(p: &ThreeModeParams, options: &ScanOptions) -> Result<ScanRow> {
    let model = build_homodyne_model(p, options.rwa)?;
    let state = periodic_steady_state(&model, &options.settings)?;
    scan_state(p, &state)
}

/// Classification row of an already computed periodic state of `p`.
pub fn scan_state(p: &ThreeModeParams, state: &PeriodicState) -> Result<ScanRow> {
    let mean = state.time_average();
    let report = classify_three_mode(&mean, Some(*p))?;

    let mut en_min = [f64::INFINITY; 3];
    let mut duan_min = f64::INFINITY;
    for (_, s) in &state.samples {
        let en = negativities(s)?;
        for k in 0..3 {
            en_min[k] = en_min[k].min(en[k]);
        }
        duan_min = duan_min.min(duan_sum(s, 1, 2)?);
    }
    Ok(ScanRow {
        kappa: p.kappa,
        g: p.g,
        class: Some(report.class),
        class_min: Some(class_from_negativities(en_min)),
        negativity: report.bipartition_negativity,
        negativity_min: en_min,
        duan_mean: report.duan_value,
        duan_min,
        duan_violation: report.duan_value < 1.0,
        min_symplectic_eigenvalue: state.min_symplectic_eigenvalue()?,
        residual: state.residual,
        periods: state.periods,
        error: None,
    })
}

/// Classification map over `kappas × gs`, sorted by `(g, κ)`. Failures are
/// kept as flagged rows.
pub fn scan_region(
    grid: &ScanGrid,
    base: &ThreeModeParams,
    options: &ScanOptions,
) -> Result<Vec<ScanRow>> {
    if grid.kappas.is_empty() || grid.gs.is_empty() {
        return Err(Error::invalid("scan grid is empty"));
    }
    let points: Vec<(f64, f64)> = grid
        .gs
        .iter()
        .flat_map(|&g| grid.kappas.iter().map(move |&k| (g, k)))
        .collect();
    let mut rows: Vec<ScanRow> = points
        .par_iter()
        .map(|&(g, kappa)| {
            let p = ThreeModeParams { g, kappa, ..*base };
            scan_point(&p, options).unwrap_or_else(|e| ScanRow::failed(kappa, g, &e))
        })
        .collect();
    rows.sort_by(|a, b| a.g.total_cmp(&b.g).then(a.kappa.total_cmp(&b.kappa)));
    Ok(rows)
}
