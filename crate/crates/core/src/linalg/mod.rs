//! Dense linear-algebra substrate.
//!
//! Skew-symmetric matrices, an oracle-grade matrix exponential, rotation-plane
//! decomposition of skew matrices, complex DFT, and an LU-backed linear solver.

mod dft;
mod expm;
mod planes;
mod skew;
mod solve;

pub use dft::{dft, idft, ComplexVector, FftPair};
pub use expm::{matrix_exp, MAX_EXP_NORM};
pub use planes::{plane_decompose, rotation_blocks, PlaneDecomposition};
pub use skew::SkewMatrix;
pub use solve::{solve_linear, LuSolver};

use nalgebra::DMatrix;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// `max |a - b|` entrywise. Panics on shape mismatch.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn vec_max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter()
        .zip(b)
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

/// `max |P^T P - I|`.
pub fn orthogonality_residual(p: &DMatrix<f64>) -> f64 {
    let n = p.ncols();
    max_abs_diff(&(p.transpose() * p), &DMatrix::identity(n, n))
}

/// Induced infinity norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn matvec(m: &DMatrix<f64>, z: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.ncols(), z.len());
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * z[j]).sum())
        .collect()
}

pub(crate) fn matvec_transpose(m: &DMatrix<f64>, z: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.nrows(), z.len());
    // Column-major storage makes column dots contiguous.
    m.column_iter()
        .map(|col| col.iter().zip(z).map(|(a, b)| a * b).sum())
        .collect()
}

pub(crate) fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}
