//! TOML run configuration.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MeasurementSpec, SystemParams, ThreeModeParams, TwoModeParams};
use crate::riccati::{
    ConvergenceStrategy, PeriodicSettings, DEFAULT_DT, DEFAULT_SAMPLES_PER_PERIOD, DEFAULT_TOL,
};

/// Parameters that a sweep axis may vary.
pub const SWEEPABLE: [&str; 6] = ["g", "kappa", "gamma", "nbar", "eta", "omega_split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    #[default]
    TwoMode,
    ThreeMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Rwa,
    Full,
}

/// System type and physical parameters, all in units of the (mean)
/// mechanical frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub kind: SystemKind,
    pub model: ModelKind,
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub nbar: f64,
    pub eta: f64,
    /// Half the mechanical frequency difference; three-mode only.
    pub omega_split: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        let p = TwoModeParams::default();
        Self {
            kind: SystemKind::TwoMode,
            model: ModelKind::Rwa,
            g: p.g,
            kappa: p.kappa,
            gamma: p.gamma,
            nbar: p.nbar,
            eta: p.eta,
            omega_split: ThreeModeParams::default().omega_split,
        }
    }
}

impl SystemSection {
    pub fn rwa(&self) -> bool {
        self.model == ModelKind::Rwa
    }

    pub fn two_mode(&self) -> TwoModeParams {
        TwoModeParams::new(self.g, self.kappa, self.gamma, self.nbar, self.eta)
    }

    pub fn three_mode(&self) -> ThreeModeParams {
        ThreeModeParams::new(
            self.omega_split,
            self.g,
            self.kappa,
            self.gamma,
            self.nbar,
            self.eta,
        )
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        Some(match name {
            "g" => self.g,
            "kappa" => self.kappa,
            "gamma" => self.gamma,
            "nbar" => self.nbar,
            "eta" => self.eta,
            "omega_split" => self.omega_split,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "g" => &mut self.g,
            "kappa" => &mut self.kappa,
            "gamma" => &mut self.gamma,
            "nbar" => &mut self.nbar,
            "eta" => &mut self.eta,
            "omega_split" => &mut self.omega_split,
            _ => return Err(Error::invalid(format!("unknown parameter `{name}`"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let res = match self.kind {
            SystemKind::TwoMode => self.two_mode().validate(),
            SystemKind::ThreeMode => self.three_mode().validate(),
        };
        res.map_err(|e| keyed("system", e))?;
        if !(self.gamma > 0.0) {
            return Err(Error::config_key("system.gamma", "must be positive"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::config_key("system.kappa", "must be positive"));
        }
        Ok(())
    }
}

/// Turns a parameter validation message `"key: msg"` into a keyed config error.
fn keyed(section: &str, err: Error) -> Error {
    match err {
        Error::InvalidArgument(msg) => match msg.split_once(": ") {
            Some((key, rest)) if !key.contains(' ') => {
                Error::config_key(&format!("{section}.{key}"), rest)
            }
            _ => Error::Config {
                key: Some(section.into()),
                message: msg,
            },
        },
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    pub r: f64,
    pub theta: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self { r: 1e-8, theta: FRAC_PI_2 }
    }
}

impl MeasurementSection {
    pub fn spec(&self, eta: f64) -> MeasurementSpec {
        MeasurementSpec {
            r: self.r,
            theta: self.theta,
            eta_optical: eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// One grid axis: either explicit `values` or `min`, `max`, `count`, `spacing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn range(parameter: &str, min: f64, max: f64, count: usize, spacing: Spacing) -> Self {
        Self {
            parameter: parameter.into(),
            min: Some(min),
            max: Some(max),
            count: Some(count),
            spacing,
            values: None,
        }
    }

    pub fn list(parameter: &str, values: &[f64]) -> Self {
        Self {
            parameter: parameter.into(),
            min: None,
            max: None,
            count: None,
            spacing: Spacing::Linear,
            values: Some(values.to_vec()),
        }
    }

    /// Grid values, endpoints included.
    pub fn points(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let (min, max, n) = (
            self.min.unwrap_or(f64::NAN),
            self.max.unwrap_or(f64::NAN),
            self.count.unwrap_or(1),
        );
        if n == 1 {
            return vec![min];
        }
        (0..n)
            .map(|i| {
                if i == 0 {
                    return min;
                }
                if i == n - 1 {
                    return max;
                }
                let f = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => min + f * (max - min),
                    Spacing::Log => (min.ln() + f * (max.ln() - min.ln())).exp(),
                }
            })
            .collect()
    }

    fn validate(&self, idx: usize, kind: SystemKind) -> Result<()> {
        let key = |field: &str| format!("sweep.axis[{idx}].{field}");
        if !SWEEPABLE.contains(&self.parameter.as_str()) {
            return Err(Error::config_key(
                &key("parameter"),
                format!(
                    "unknown parameter `{}` (expected one of {})",
                    self.parameter,
                    SWEEPABLE.join(", ")
                ),
            ));
        }
        if self.parameter == "omega_split" && kind == SystemKind::TwoMode {
            return Err(Error::config_key(
                &key("parameter"),
                "omega_split only applies to the three-mode system",
            ));
        }
        let rate = matches!(self.parameter.as_str(), "g" | "kappa" | "gamma");
        match (&self.values, self.min, self.max, self.count) {
            (Some(v), None, None, None) => {
                if v.is_empty() {
                    return Err(Error::config_key(&key("values"), "must not be empty"));
                }
                if v.iter().any(|x| !x.is_finite() || (rate && *x <= 0.0)) {
                    return Err(Error::config_key(
                        &key("values"),
                        "values must be finite, and positive for rate parameters",
                    ));
                }
            }
            (None, Some(min), Some(max), Some(count)) => {
                if count < 1 {
                    return Err(Error::config_key(&key("count"), "must be at least 1"));
                }
                if !(min.is_finite() && max.is_finite() && min <= max) {
                    return Err(Error::config_key(&key("max"), "need finite min <= max"));
                }
                if rate && min <= 0.0 {
                    return Err(Error::config_key(
                        &key("min"),
                        format!("bounds of the rate `{}` must be positive", self.parameter),
                    ));
                }
                if self.spacing == Spacing::Log && min <= 0.0 {
                    return Err(Error::config_key(&key("min"), "log spacing needs min > 0"));
                }
            }
            _ => {
                return Err(Error::config_key(
                    &key("values"),
                    "give either `values` or all of `min`, `max`, `count`",
                ))
            }
        }
        Ok(())
    }
}

/// Grid axes; the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub axis: Vec<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt: f64,
    pub tol: f64,
    pub max_periods: usize,
    pub samples_per_period: usize,
    pub strategy: ConvergenceStrategy,
    /// Time step of stochastic trajectories.
    pub sde_dt: f64,
    /// Duration of stochastic trajectories.
    pub t_end: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let s = PeriodicSettings::default();
        Self {
            dt: DEFAULT_DT,
            tol: DEFAULT_TOL,
            max_periods: s.max_periods,
            samples_per_period: DEFAULT_SAMPLES_PER_PERIOD,
            strategy: s.strategy,
            sde_dt: 1e-3,
            t_end: 100.0,
        }
    }
}

impl IntegratorSection {
    pub fn periodic_settings(&self) -> PeriodicSettings {
        PeriodicSettings {
            dt: self.dt,
            tol: self.tol,
            max_periods: self.max_periods,
            samples_per_period: self.samples_per_period,
            strategy: self.strategy,
            initial: None,
        }
    }

    fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("integrator.dt", self.dt),
            ("integrator.tol", self.tol),
            ("integrator.sde_dt", self.sde_dt),
            ("integrator.t_end", self.t_end),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config_key(key, "must be positive"));
            }
        }
        if self.max_periods == 0 {
            return Err(Error::config_key("integrator.max_periods", "must be at least 1"));
        }
        if self.samples_per_period == 0 {
            return Err(Error::config_key(
                "integrator.samples_per_period",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub format: OutputFormat,
    /// File stem of the main table.
    pub name: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            format: OutputFormat::Csv,
            name: "sweep".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSection,
    pub measurement: MeasurementSection,
    pub sweep: SweepSection,
    pub integrator: IntegratorSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.measurement
            .spec(self.system.eta)
            .validate()
            .map_err(|e| keyed("measurement", e))?;
        for (i, axis) in self.sweep.axis.iter().enumerate() {
            axis.validate(i, self.system.kind)?;
        }
        for (i, a) in self.sweep.axis.iter().enumerate() {
            if self.sweep.axis[..i].iter().any(|b| b.parameter == a.parameter) {
                return Err(Error::config_key(
                    &format!("sweep.axis[{i}].parameter"),
                    format!("`{}` is swept twice", a.parameter),
                ));
            }
        }
        // every grid point must be a valid system
        for point in self.grid() {
            self.system_at(&point)?.validate()?;
        }
        self.integrator.validate()?;
        if self.output.name.is_empty() {
            return Err(Error::config_key("output.name", "must not be empty"));
        }
        Ok(())
    }

    /// Cartesian product of the axes in row-major order. A config without
    /// axes has a single empty point.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for axis in &self.sweep.axis {
            let pts = axis.points();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    pts.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.sweep.axis.iter().map(|a| a.parameter.clone()).collect()
    }

    /// The system section with the swept parameters replaced by `point`.
    pub fn system_at(&self, point: &[f64]) -> Result<SystemSection> {
        let mut s = self.system;
        for (axis, &v) in self.sweep.axis.iter().zip(point) {
            s.set(&axis.parameter, v)?;
        }
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            key: None,
            message: e.to_string(),
        })
    }
}

/// Parses and validates a TOML document. Missing keys take their defaults.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config {
        key: None,
        message: e.to_string().trim_end().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
