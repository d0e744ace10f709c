//! Fixed-dimension RK4 kernel for the Riccati flow and its tangent map.
//!
//! The flow is rewritten with `G = BBᵀ`, `H = BNᵀ`, `K = NNᵀ` as
//! `σ̇ = Fσ + σFᵀ − σGσ + D − K` with `F(t) = A(t) + Hᵀ`, so every operand is
//! square and the kernel can run on stack-allocated matrices.

use nalgebra::{allocator::Allocator, DMatrix, DefaultAllocator, Dim, OMatrix};

use crate::model::ModelMatrices;

pub(crate) type Mat<D> = OMatrix<f64, D, D>;

/// Runs `$body` with `$d` bound to `Const<4>`, `Const<6>` or `Dyn(n)`.
macro_rules! with_dim {
    ($n:expr, |$d:ident| $body:expr) => {
        match $n {
            4 => {
                let $d = nalgebra::Const::<4>;
                $body
            }
            6 => {
                let $d = nalgebra::Const::<6>;
                $body
            }
            n => {
                let $d = nalgebra::Dyn(n);
                $body
            }
        }
    };
}
pub(crate) use with_dim;

pub(crate) fn from_dynamic<D: Dim>(m: &DMatrix<f64>, dim: D) -> Mat<D>
where
    DefaultAllocator: Allocator<D, D>,
{
    Mat::<D>::from_fn_generic(dim, dim, |i, j| m[(i, j)])
}

pub(crate) fn to_dynamic<D: Dim>(m: &Mat<D>) -> DMatrix<f64>
where
    DefaultAllocator: Allocator<D, D>,
{
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub(crate) struct Flow<D: Dim>
where
    DefaultAllocator: Allocator<D, D>,
{
    f0: Mat<D>,
    fc: Mat<D>,
    fs: Mat<D>,
    g: Mat<D>,
    source: Mat<D>,
    nu: f64,
    oscillating: bool,
}

impl<D: Dim> Flow<D>
where
    DefaultAllocator: Allocator<D, D>,
{
    pub fn new(model: &ModelMatrices, dim: D) -> Self {
        let parts = model.drift_parts();
        let (b, n) = (model.meas_b(), model.meas_n());
        let h = b * n.transpose();
        let k = n * n.transpose();
        let oscillating = !model.is_rwa()
            && (parts.cos.iter().any(|v| *v != 0.0) || parts.sin.iter().any(|v| *v != 0.0));
        Self {
            f0: from_dynamic(&(&parts.constant + h.transpose()), dim),
            fc: from_dynamic(&parts.cos, dim),
            fs: from_dynamic(&parts.sin, dim),
            g: from_dynamic(&(b * b.transpose()), dim),
            source: from_dynamic(&(model.diffusion() - k), dim),
            nu: model.modulation_frequency(),
            oscillating,
        }
    }

    fn effective_drift(&self, t: f64) -> Mat<D> {
        if !self.oscillating {
            return self.f0.clone();
        }
        let (s, c) = (self.nu * t).sin_cos();
        &self.f0 + &self.fc * c + &self.fs * s
    }

    fn rhs_with(&self, f: &Mat<D>, s: &Mat<D>) -> Mat<D> {
        let r = f * s - (s * &self.g * s) * 0.5;
        &r + r.transpose() + &self.source
    }

    #[cfg(test)]
    pub fn rhs(&self, s: &Mat<D>, t: f64) -> Mat<D> {
        self.rhs_with(&self.effective_drift(t), s)
    }

    /// One classical RK4 step.
    pub fn step(&self, s: &Mat<D>, t: f64, h: f64) -> Mat<D> {
        let f1 = self.effective_drift(t);
        let f2 = self.effective_drift(t + 0.5 * h);
        let f3 = self.effective_drift(t + h);
        let k1 = self.rhs_with(&f1, s);
        let k2 = self.rhs_with(&f2, &(s + &k1 * (0.5 * h)));
        let k3 = self.rhs_with(&f2, &(s + &k2 * (0.5 * h)));
        let k4 = self.rhs_with(&f3, &(s + &k3 * h));
        s + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
    }

    /// RK4 step that also pushes each tangent through the exact derivative of
    /// the discrete step.
    pub fn step_with_tangents(&self, s: &Mat<D>, t: f64, h: f64, tangents: &mut [Mat<D>]) -> Mat<D> {
        let f1 = self.effective_drift(t);
        let f2 = self.effective_drift(t + 0.5 * h);
        let f3 = self.effective_drift(t + h);

        let k1 = self.rhs_with(&f1, s);
        let s2 = s + &k1 * (0.5 * h);
        let k2 = self.rhs_with(&f2, &s2);
        let s3 = s + &k2 * (0.5 * h);
        let k3 = self.rhs_with(&f2, &s3);
        let s4 = s + &k3 * h;
        let k4 = self.rhs_with(&f3, &s4);

        // derivative of the rhs at state x: δ ↦ Mδ + δMᵀ, M = F − xG
        let m1 = &f1 - s * &self.g;
        let m2 = &f2 - &s2 * &self.g;
        let m3 = &f2 - &s3 * &self.g;
        let m4 = &f3 - &s4 * &self.g;
        let lin = |m: &Mat<D>, d: &Mat<D>| {
            let p = m * d;
            &p + p.transpose()
        };
        for delta in tangents.iter_mut() {
            let d1 = lin(&m1, delta);
            let d2 = lin(&m2, &(&*delta + &d1 * (0.5 * h)));
            let d3 = lin(&m3, &(&*delta + &d2 * (0.5 * h)));
            let d4 = lin(&m4, &(&*delta + &d3 * h));
            *delta += (d1 + (d2 + d3) * 2.0 + d4) * (h / 6.0);
        }
        s + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
    }
}

pub(crate) fn is_finite<D: Dim>(m: &Mat<D>) -> bool
where
    DefaultAllocator: Allocator<D, D>,
{
    m.iter().all(|v| v.is_finite())
}
