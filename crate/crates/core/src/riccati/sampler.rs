use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{CovarianceTrajectory, PeriodicState};
use crate::error::{Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::model::{ModelMatrices, SystemParams, TwoModeParams};

/// Conditional covariance as a function of time, needed by the mean equation.
#[derive(Debug, Clone)]
pub enum SigmaSchedule {
    Constant(CovarianceMatrix),
    /// Periodic attractor, interpolated in phase; time `0` is phase `0`.
    Periodic(PeriodicState),
    /// Stored integration output, interpolated in time. Times outside the
    /// stored range are rejected.
    Trajectory(CovarianceTrajectory),
}

impl SigmaSchedule {
    fn dim(&self) -> usize {
        match self {
            Self::Constant(s) => s.dim(),
            Self::Periodic(p) => p.samples[0].1.dim(),
            Self::Trajectory(t) => t.states.first().map_or(0, |s| s.dim()),
        }
    }

    fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    fn covers(&self, t0: f64, t1: f64) -> bool {
        match self {
            Self::Trajectory(tr) => match (tr.times.first(), tr.times.last()) {
                (Some(&a), Some(&b)) => {
                    let slack = 1e-9 * b.abs().max(1.0);
                    t0 >= a - slack && t1 <= b + slack
                }
                _ => false,
            },
            _ => true,
        }
    }

    /// `σ(t)`.
    pub fn at(&self, t: f64) -> Result<DMatrix<f64>> {
        match self {
            Self::Constant(s) => Ok(s.matrix().clone()),
            Self::Periodic(p) => Ok(p.at_phase(t / p.period)),
            Self::Trajectory(tr) => {
                if !self.covers(t, t) {
                    return Err(Error::invalid(format!("no covariance available at t = {t}")));
                }
                let times = &tr.times;
                let i = times.partition_point(|&x| x <= t).clamp(1, times.len().max(2) - 1);
                if times.len() == 1 {
                    return Ok(tr.states[0].matrix().clone());
                }
                let (ta, tb) = (times[i - 1], times[i]);
                let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
                Ok(tr.states[i - 1].matrix() * (1.0 - w) + tr.states[i].matrix() * w)
            }
        }
    }
}

/// Approximate homodyne current `I dt = gain·⟨X_m⟩ dt + dW` of the
/// fast-cavity regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticCurrent {
    pub gain: f64,
    /// Measurement channel whose innovation enters the current.
    pub channel: usize,
    /// Quadrature index of `X_m`.
    pub quadrature: usize,
}

impl DiagnosticCurrent {
    /// `gain = 2√(γηC)` on the optical phase channel.
    pub fn fast_cavity(p: &TwoModeParams) -> Self {
        let coop = 4.0 * p.g * p.g / (p.kappa() * p.gamma());
        Self {
            gain: 2.0 * (p.gamma * p.eta * coop).sqrt(),
            channel: 1,
            quadrature: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    /// Innovation increments `dW` of each step, one entry per measurement
    /// channel (zero for unmonitored channels).
    pub currents: Vec<DVector<f64>>,
    /// `I dt` per step when a diagnostic current was requested.
    pub diagnostic_current: Option<Vec<f64>>,
    pub seed: u64,
    pub dt: f64,
}

struct Stepper<'a> {
    model: &'a ModelMatrices,
    schedule: &'a SigmaSchedule,
    monitored: Vec<usize>,
    fixed: Option<(DMatrix<f64>, DMatrix<f64>)>,
    sqrt_dt: f64,
    dt: f64,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a ModelMatrices, schedule: &'a SigmaSchedule, dt: f64) -> Result<Self> {
        let fixed = if schedule.is_constant() && (model.is_rwa() || is_static(model)) {
            Some((model.drift(0.0), gain(model, &schedule.at(0.0)?)))
        } else {
            None
        };
        Ok(Self {
            model,
            schedule,
            monitored: model.monitored_channels(),
            fixed,
            sqrt_dt: dt.sqrt(),
            dt,
        })
    }

    /// Euler–Maruyama update `x ← x + A x dt − (σB − N) dW`, filling `dw`.
    fn step(&self, x: &mut DVector<f64>, t: f64, dw: &mut DVector<f64>, rng: &mut ChaCha8Rng) -> Result<()> {
        for &c in &self.monitored {
            let z: f64 = StandardNormal.sample(rng);
            dw[c] = z * self.sqrt_dt;
        }
        let mut incr = DVector::zeros(x.len());
        match &self.fixed {
            Some((a, k)) => {
                incr.gemv(self.dt, a, x, 0.0);
                incr.gemv(-1.0, k, dw, 1.0);
            }
            None => {
                let a = self.model.drift(t);
                let k = gain(self.model, &self.schedule.at(t)?);
                incr.gemv(self.dt, &a, x, 0.0);
                incr.gemv(-1.0, &k, dw, 1.0);
            }
        }
        *x += incr;
        Ok(())
    }
}

fn is_static(model: &ModelMatrices) -> bool {
    let p = model.drift_parts();
    p.cos.iter().chain(p.sin.iter()).all(|v| *v == 0.0)
}

fn gain(model: &ModelMatrices, sigma: &DMatrix<f64>) -> DMatrix<f64> {
    sigma * model.meas_b() - model.meas_n()
}

fn check_inputs(
    model: &ModelMatrices,
    schedule: &SigmaSchedule,
    x0: &DVector<f64>,
    dt: f64,
    t_end: f64,
) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0) {
        return Err(Error::invalid("need dt > 0 and t_end >= 0"));
    }
    if x0.len() != model.dim() || schedule.dim() != model.dim() {
        return Err(Error::invalid("mean vector or covariance schedule has the wrong dimension"));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    if !schedule.covers(0.0, steps as f64 * dt) {
        return Err(Error::invalid("covariance schedule does not cover the sampling interval"));
    }
    Ok(steps)
}

/// Samples one conditional-mean trajectory on `[0, t_end]` with fixed step
/// `dt`. Identical seeds give bit-identical records.
pub fn sample_trajectory(
    model: &ModelMatrices,
    schedule: &SigmaSchedule,
    x0: &DVector<f64>,
    seed: u64,
    dt: f64,
    t_end: f64,
    diagnostic: Option<DiagnosticCurrent>,
) -> Result<TrajectoryRecord> {
    let steps = check_inputs(model, schedule, x0, dt, t_end)?;
    if let Some(d) = diagnostic {
        if d.channel >= model.meas_b().ncols() || d.quadrature >= model.dim() {
            return Err(Error::invalid("diagnostic current refers to a missing channel"));
        }
    }
    let stepper = Stepper::new(model, schedule, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = model.meas_b().ncols();

    let mut x = x0.clone();
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(steps + 1),
        means: Vec::with_capacity(steps + 1),
        currents: Vec::with_capacity(steps),
        diagnostic_current: diagnostic.map(|_| Vec::with_capacity(steps)),
        seed,
        dt,
    };
    rec.times.push(0.0);
    rec.means.push(x.clone());
    for k in 0..steps {
        let t = k as f64 * dt;
        let mut dw = DVector::zeros(channels);
        if let (Some(d), Some(out)) = (diagnostic, rec.diagnostic_current.as_mut()) {
            // current uses the mean at the start of the interval
            let xm = x[d.quadrature];
            stepper.step(&mut x, t, &mut dw, &mut rng)?;
            out.push(d.gain * xm * dt + dw[d.channel]);
        } else {
            stepper.step(&mut x, t, &mut dw, &mut rng)?;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("non-finite mean at t = {}", t + dt)));
        }
        rec.times.push(t + dt);
        rec.means.push(x.clone());
        rec.currents.push(dw);
    }
    Ok(rec)
}

/// Final conditional means of `count` independent trajectories with seeds
/// `base_seed, base_seed + 1, …`, run in parallel. Output order follows the
/// seeds.
pub fn ensemble_final_means(
    model: &ModelMatrices,
    schedule: &SigmaSchedule,
    x0: &DVector<f64>,
    base_seed: u64,
    count: usize,
    dt: f64,
    t_end: f64,
) -> Result<Vec<DVector<f64>>> {
    let steps = check_inputs(model, schedule, x0, dt, t_end)?;
    let stepper = Stepper::new(model, schedule, dt)?;
    let channels = model.meas_b().ncols();
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(i));
            let mut x = x0.clone();
            let mut dw = DVector::zeros(channels);
            for k in 0..steps {
                stepper.step(&mut x, k as f64 * dt, &mut dw, &mut rng)?;
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::numerical("non-finite mean in ensemble member"));
            }
            Ok(x)
        })
        .collect()
}

/// Unbiased sample covariance of a set of vectors.
pub fn sample_covariance(xs: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    if xs.len() < 2 {
        return Err(Error::invalid("need at least two samples"));
    }
    let n = xs[0].len();
    let mean = xs.iter().fold(DVector::zeros(n), |acc, x| acc + x) / xs.len() as f64;
    let mut cov = DMatrix::zeros(n, n);
    for x in xs {
        let d = x - &mean;
        cov.ger(1.0, &d, &d, 1.0);
    }
    Ok(cov / (xs.len() - 1) as f64)
}
