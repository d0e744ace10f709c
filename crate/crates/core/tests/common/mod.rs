#![allow(dead_code)]

use nalgebra::DMatrix;
use optobae::gaussian::symplectic_form;
use optobae::linalg::{direct_sum, symmetrize};
use optobae::CovarianceMatrix;
use proptest::prelude::*;

/// `exp(Ω H)` for symmetric `H`, a symplectic matrix.
pub fn symplectic_from(h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows() / 2;
    let om = symplectic_form(n).unwrap().matrix().clone();
    (om * symmetrize(h)).exp()
}

pub fn symmetric_from(dim: usize, entries: &[f64]) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(dim, dim);
    let mut k = 0;
    for i in 0..dim {
        for j in i..dim {
            h[(i, j)] = entries[k];
            h[(j, i)] = entries[k];
            k += 1;
        }
    }
    h
}

/// `S diag(ν) Sᵀ` with symplectic `S` and `ν_k ≥ ½`.
pub fn physical_cm(n_modes: usize, h: &[f64], excess: &[f64]) -> CovarianceMatrix {
    let dim = 2 * n_modes;
    let s = symplectic_from(&symmetric_from(dim, h));
    let d = DMatrix::from_fn(dim, dim, |i, j| if i == j { 0.5 + excess[i / 2] } else { 0.0 });
    CovarianceMatrix::new(symmetrize(&(&s * d * s.transpose()))).unwrap()
}

pub fn cm_strategy(n_modes: usize, scale: f64) -> impl Strategy<Value = CovarianceMatrix> {
    let dim = 2 * n_modes;
    (
        prop::collection::vec(-scale..scale, dim * (dim + 1) / 2),
        prop::collection::vec(0.0..2.0f64, n_modes),
    )
        .prop_map(move |(h, ex)| physical_cm(n_modes, &h, &ex))
}

/// Block-diagonal local symplectic map from per-mode `(angle, squeeze)`.
pub fn local_symplectic(ops: &[(f64, f64)]) -> DMatrix<f64> {
    let blocks: Vec<DMatrix<f64>> = ops
        .iter()
        .map(|&(th, r)| {
            let (s, c) = th.sin_cos();
            let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let sq = DMatrix::from_row_slice(2, 2, &[(-r).exp(), 0.0, 0.0, r.exp()]);
            rot * sq
        })
        .collect();
    direct_sum(&blocks)
}

pub fn transform(sigma: &CovarianceMatrix, s: &DMatrix<f64>) -> CovarianceMatrix {
    CovarianceMatrix::new(symmetrize(&(s * sigma.matrix() * s.transpose()))).unwrap()
}
