use std::f64::consts::PI;

use nalgebra::{allocator::Allocator, Cholesky, DMatrix, DVector, DefaultAllocator, Dim};
use serde::{Deserialize, Serialize};

use super::kernel::{from_dynamic, is_finite, to_dynamic, with_dim, Flow, Mat};
use super::check_sample;
use crate::error::{Error, Result};
use crate::gaussian::{min_symplectic_eigenvalue, CovarianceMatrix};
use crate::linalg::{max_abs, symmetrize, upper_indices};
use crate::model::ModelMatrices;

/// Default RK4 step, one thousandth of the modulation period for a unit frequency.
pub const DEFAULT_DT: f64 = PI / 1000.0;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES_PER_PERIOD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceStrategy {
    /// Newton iteration on the period map with the exact RK4 tangent.
    #[default]
    Newton,
    /// Repeated application of the period map.
    Iterate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSettings {
    /// Requested step; the actual step divides the period into a multiple of
    /// `samples_per_period` equal steps no longer than this.
    pub dt: f64,
    /// Bound on `max|σ(T) − σ(0)| / max(1, max|σ|)`.
    pub tol: f64,
    pub max_periods: usize,
    pub samples_per_period: usize,
    pub strategy: ConvergenceStrategy,
    /// Starting state; the model's bath covariance when `None`.
    pub initial: Option<CovarianceMatrix>,
}

impl Default for PeriodicSettings {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            tol: DEFAULT_TOL,
            max_periods: 5000,
            samples_per_period: DEFAULT_SAMPLES_PER_PERIOD,
            strategy: ConvergenceStrategy::Newton,
            initial: None,
        }
    }
}

/// Entrywise minimum, mean and maximum over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementStats {
    pub min: DMatrix<f64>,
    pub mean: DMatrix<f64>,
    pub max: DMatrix<f64>,
}

impl ElementStats {
    fn from_samples(samples: &[(f64, CovarianceMatrix)]) -> Self {
        let first = samples[0].1.matrix();
        let mut min = first.clone();
        let mut max = first.clone();
        let mut mean = DMatrix::zeros(first.nrows(), first.ncols());
        for (_, s) in samples {
            let m = s.matrix();
            min.zip_apply(m, |a, b| *a = a.min(b));
            max.zip_apply(m, |a, b| *a = a.max(b));
            mean += m;
        }
        mean /= samples.len() as f64;
        Self { min, mean, max }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicState {
    /// `(phase, σ)` with phase in `[0, 1)` of the period starting at `t = 0`.
    pub samples: Vec<(f64, CovarianceMatrix)>,
    pub stats: ElementStats,
    pub converged: bool,
    /// Relative period-map residual of the recorded period.
    pub residual: f64,
    /// Residual after every period-map evaluation, in order.
    pub residual_history: Vec<f64>,
    /// Number of period-map evaluations used.
    pub periods: usize,
    pub period: f64,
}

impl PeriodicState {
    /// Period average as a covariance matrix.
    pub fn time_average(&self) -> CovarianceMatrix {
        CovarianceMatrix::from_symmetric(self.stats.mean.clone())
    }

    /// Smallest symplectic eigenvalue across all samples.
    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        self.samples.iter().try_fold(f64::INFINITY, |acc, (_, s)| {
            Ok(acc.min(min_symplectic_eigenvalue(s)?))
        })
    }

    /// Covariance at `phase` (wrapped into `[0, 1)`), linearly interpolated
    /// between samples.
    pub fn at_phase(&self, phase: f64) -> DMatrix<f64> {
        let n = self.samples.len();
        let x = phase.rem_euclid(1.0) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let w = x - i as f64;
        let a = self.samples[i].1.matrix();
        let b = self.samples[(i + 1) % n].1.matrix();
        a * (1.0 - w) + b * w
    }
}

// kept outside the generic impl: its allocator bounds confuse trait selection
fn solve_dense(lhs: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    lhs.lu().solve(&rhs)
}

fn is_positive_definite(m: DMatrix<f64>) -> bool {
    Cholesky::new(m).is_some()
}

fn relative_residual(diff: f64, state: &DMatrix<f64>) -> f64 {
    diff / max_abs(state).max(1.0)
}

/// Converges the Riccati flow to its time-periodic attractor and records one
/// period of samples together with entrywise statistics.
///
/// For a model without oscillating drift the attractor is the stationary
/// state and the statistics bands have zero width.
pub fn periodic_steady_state(
    model: &ModelMatrices,
    settings: &PeriodicSettings,
) -> Result<PeriodicState> {
    if !(settings.tol > 0.0) {
        return Err(Error::invalid("tol must be positive"));
    }
    if !(settings.dt > 0.0 && settings.dt.is_finite()) {
        return Err(Error::invalid("dt must be positive"));
    }
    if settings.samples_per_period == 0 || settings.max_periods == 0 {
        return Err(Error::invalid("samples_per_period and max_periods must be positive"));
    }
    let initial = match &settings.initial {
        Some(s) if s.dim() != model.dim() => {
            return Err(Error::invalid("initial covariance does not match the model dimension"))
        }
        Some(s) => s.matrix().clone(),
        None => model.bath_covariance().clone(),
    };
    with_dim!(model.dim(), |d| Shooter::new(model, settings, d).run(from_dynamic(&initial, d)))
}

struct Shooter<'a, D: Dim>
where
    DefaultAllocator: Allocator<D, D>,
{
    flow: Flow<D>,
    dim: D,
    settings: &'a PeriodicSettings,
    period: f64,
    steps: usize,
    h: f64,
    periods: usize,
    history: Vec<f64>,
}

impl<'a, D: Dim> Shooter<'a, D>
where
    DefaultAllocator: Allocator<D, D>,
{
    fn new(model: &ModelMatrices, settings: &'a PeriodicSettings, dim: D) -> Self {
        let period = model.period();
        let spp = settings.samples_per_period;
        let raw = (period / settings.dt - 1e-9).ceil().max(1.0) as usize;
        let steps = raw.div_ceil(spp) * spp;
        Self {
            flow: Flow::new(model, dim),
            dim,
            settings,
            period,
            steps,
            h: period / steps as f64,
            periods: 0,
            history: Vec::new(),
        }
    }

    fn period_map(&mut self, s: &Mat<D>) -> Result<Mat<D>> {
        self.periods += 1;
        let mut x = s.clone();
        for k in 0..self.steps {
            x = self.flow.step(&x, k as f64 * self.h, self.h);
        }
        self.finite(x)
    }

    fn finite(&self, x: Mat<D>) -> Result<Mat<D>> {
        if is_finite(&x) {
            Ok(x)
        } else {
            Err(Error::numerical(format!(
                "non-finite covariance after {} periods",
                self.periods
            )))
        }
    }

    fn residual(&self, start: &Mat<D>, end: &Mat<D>) -> f64 {
        let diff = to_dynamic(&(end - start));
        relative_residual(max_abs(&diff), &to_dynamic(start))
    }

    fn exhausted(&self) -> bool {
        self.periods >= self.settings.max_periods
    }

    fn non_convergence(&self) -> Error {
        Error::NonConvergence {
            periods: self.periods,
            residual: self.history.last().copied().unwrap_or(f64::INFINITY),
        }
    }

    fn run(mut self, mut s: Mat<D>) -> Result<PeriodicState> {
        loop {
            s = match self.settings.strategy {
                ConvergenceStrategy::Newton => self.newton(s)?,
                ConvergenceStrategy::Iterate => self.iterate(s)?,
            };
            let (samples, end) = self.record(&s)?;
            let residual = self.residual(&s, &end);
            self.history.push(residual);
            if residual < self.settings.tol {
                return Ok(PeriodicState {
                    stats: ElementStats::from_samples(&samples),
                    samples,
                    converged: true,
                    residual,
                    residual_history: self.history,
                    periods: self.periods,
                    period: self.period,
                });
            }
            if self.exhausted() {
                return Err(self.non_convergence());
            }
            s = end;
        }
    }

    fn iterate(&mut self, mut s: Mat<D>) -> Result<Mat<D>> {
        while !self.exhausted() {
            let next = self.period_map(&s)?;
            let r = self.residual(&s, &next);
            self.history.push(r);
            s = next;
            if r < self.settings.tol {
                break;
            }
        }
        Ok(s)
    }

    fn period_map_with_jacobian(&mut self, s: &Mat<D>) -> Result<(Mat<D>, DMatrix<f64>)> {
        self.periods += 1;
        let n = s.nrows();
        let idx = upper_indices(n);
        let mut tangents: Vec<Mat<D>> = idx
            .iter()
            .map(|&(i, j)| {
                let mut e = Mat::<D>::zeros_generic(self.dim, self.dim);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                e
            })
            .collect();
        let mut x = s.clone();
        for k in 0..self.steps {
            x = self
                .flow
                .step_with_tangents(&x, k as f64 * self.h, self.h, &mut tangents);
        }
        let x = self.finite(x)?;
        let jac = DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
            let (i, j) = idx[r];
            tangents[c][(i, j)]
        });
        Ok((x, jac))
    }

    fn newton(&mut self, mut s: Mat<D>) -> Result<Mat<D>> {
        let idx = upper_indices(s.nrows());
        let tol = self.settings.tol;
        // Slow modes barely move in one period, so a small residual alone does
        // not pin the state; near convergence the Newton step is required to
        // be small as well.
        let mut polish = 0;
        while !self.exhausted() {
            let (mapped, jac) = self.period_map_with_jacobian(&s)?;
            let r = self.residual(&s, &mapped);
            self.history.push(r);
            let f = DVector::from_iterator(idx.len(), idx.iter().map(|&(i, j)| mapped[(i, j)] - s[(i, j)]));
            let lhs: DMatrix<f64> = jac - DMatrix::<f64>::identity(idx.len(), idx.len());
            let Some(step) = solve_dense(lhs, -f) else {
                if r < tol {
                    return Ok(s);
                }
                s = mapped;
                continue;
            };
            let mut delta = Mat::<D>::zeros_generic(self.dim, self.dim);
            for (k, &(i, j)) in idx.iter().enumerate() {
                delta[(i, j)] = step[k];
                delta[(j, i)] = step[k];
            }

            if r < tol {
                let trial = &s + &delta;
                if !is_positive_definite(to_dynamic(&trial)) {
                    return Ok(s);
                }
                let size = relative_residual(max_abs(&to_dynamic(&delta)), &to_dynamic(&s));
                polish += 1;
                if size < tol || polish >= 4 {
                    return Ok(trial);
                }
                s = trial;
                continue;
            }

            let mut accepted = None;
            let mut alpha = 1.0;
            for _ in 0..8 {
                if self.exhausted() {
                    break;
                }
                let trial = &s + &delta * alpha;
                if is_positive_definite(to_dynamic(&trial)) {
                    let trial_map = self.period_map(&trial)?;
                    let rt = self.residual(&trial, &trial_map);
                    if rt < r {
                        self.history.push(rt);
                        accepted = Some(trial);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            // plain period as a fallback step
            s = accepted.unwrap_or(mapped);
        }
        Ok(s)
    }

    /// One period from `s`, keeping `samples_per_period` equally spaced states.
    fn record(&mut self, s: &Mat<D>) -> Result<(Vec<(f64, CovarianceMatrix)>, Mat<D>)> {
        self.periods += 1;
        let spp = self.settings.samples_per_period;
        let stride = self.steps / spp;
        let mut samples = Vec::with_capacity(spp);
        let mut x = s.clone();
        for k in 0..self.steps {
            if k % stride == 0 {
                let t = k as f64 * self.h;
                let cm = CovarianceMatrix::from_symmetric(symmetrize(&to_dynamic(&x)));
                check_sample(&cm, t)?;
                samples.push((t / self.period, cm));
            }
            x = self.flow.step(&x, k as f64 * self.h, self.h);
        }
        let x = self.finite(x)?;
        Ok((samples, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::steady_state_rwa;
    use crate::model::{build_homodyne_model, TwoModeParams};

    #[test]
    fn rwa_bands_have_zero_width() {
        let p = TwoModeParams::default();
        let model = build_homodyne_model(&p, true).unwrap();
        let st = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
        assert!(st.converged);
        assert_eq!(st.samples.len(), 64);
        let width = max_abs(&(&st.stats.max - &st.stats.min));
        assert!(width <= 1e-9 * max_abs(&st.stats.mean));
        let exact = steady_state_rwa(&p).unwrap().cm;
        for i in 0..4 {
            for j in 0..4 {
                let scale = (exact[(i, i)] * exact[(j, j)]).sqrt();
                assert!((st.stats.mean[(i, j)] - exact[(i, j)]).abs() < 1e-7 * scale);
            }
        }
    }

    #[test]
    fn newton_and_iteration_agree() {
        let p = TwoModeParams::new(0.1, 0.5, 0.05, 1.0, 1.0);
        let model = build_homodyne_model(&p, false).unwrap();
        let newton = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
        let settings = PeriodicSettings {
            strategy: ConvergenceStrategy::Iterate,
            ..Default::default()
        };
        let plain = periodic_steady_state(&model, &settings).unwrap();
        assert!(newton.periods < plain.periods);
        assert!(max_abs(&(&newton.stats.mean - &plain.stats.mean)) < 1e-7);
    }

    #[test]
    fn second_initial_condition_gives_same_state() {
        let p = TwoModeParams::new(0.1, 0.3, 1e-3, 10.0, 1.0);
        let model = build_homodyne_model(&p, false).unwrap();
        let a = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
        let settings = PeriodicSettings {
            initial: Some(CovarianceMatrix::vacuum(2)),
            ..Default::default()
        };
        let b = periodic_steady_state(&model, &settings).unwrap();
        assert!(max_abs(&(&a.stats.mean - &b.stats.mean)) < 1e-6 * max_abs(&a.stats.mean));
    }

    #[test]
    fn step_count_is_a_multiple_of_samples() {
        let model = build_homodyne_model(&TwoModeParams::default(), false).unwrap();
        let st = periodic_steady_state(&model, &PeriodicSettings::default()).unwrap();
        for (k, (phase, _)) in st.samples.iter().enumerate() {
            assert!((phase - k as f64 / 64.0).abs() < 1e-12);
        }
        let mid = st.at_phase(0.5);
        assert!(max_abs(&(mid - st.samples[32].1.matrix())) < 1e-12);
    }

    #[test]
    fn exhausted_budget_reports_residual() {
        let model = build_homodyne_model(&TwoModeParams::default(), false).unwrap();
        let settings = PeriodicSettings {
            max_periods: 2,
            strategy: ConvergenceStrategy::Iterate,
            ..Default::default()
        };
        match periodic_steady_state(&model, &settings) {
            Err(Error::NonConvergence { periods, residual }) => {
                assert_eq!(periods, 3);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
