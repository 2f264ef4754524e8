//! Seeded pseudo-randomness.
//!
//! Every random draw in the crate goes through [`rng`], which returns a
//! ChaCha8 stream keyed by a `u64` seed. Results are reproducible across runs
//! and platforms for a fixed crate version.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::SkewMatrix;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn uniform_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order does not depend on nalgebra's storage.
    let v = gaussian_vec(rng, rows * cols);
    DMatrix::from_row_slice(rows, cols, &v)
}

/// Skew matrix with independent `N(0, scale^2)` entries above the diagonal.
pub fn random_skew(rng: &mut impl Rng, dim: usize, scale: f64) -> SkewMatrix {
    let upper: Vec<f64> = gaussian_vec(rng, dim * dim.saturating_sub(1) / 2)
        .into_iter()
        .map(|x| x * scale)
        .collect();
    SkewMatrix::from_upper(dim, &upper).expect("upper-triangle length is consistent")
}

/// Haar-distributed orthogonal matrix with determinant +1.
///
/// QR of a Gaussian matrix with the sign of each column fixed by the sign of
/// the corresponding diagonal entry of R; the last column is flipped if
/// needed to land in SO(d).
pub fn random_orthogonal(rng: &mut impl Rng, dim: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, dim, dim);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if dim > 0 && q.determinant() < 0.0 {
        q.column_mut(dim - 1).neg_mut();
    }
    q
}

/// Product of `reflections` random Householder reflections, materialized
/// densely in `O(reflections * d^2)`. Determinant `(-1)^reflections`.
///
/// A cheap orthogonal matrix for large `d` where QR would dominate run time.
pub fn random_householder_orthogonal(rng: &mut impl Rng, dim: usize, reflections: usize) -> DMatrix<f64> {
    let mut q = DMatrix::identity(dim, dim);
    for _ in 0..reflections {
        let v = nalgebra::DVector::from_vec(gaussian_vec(rng, dim));
        let vv = v.norm_squared();
        if vv == 0.0 {
            continue;
        }
        // Q <- Q (I - 2 v v^T / v^T v)
        let qv = &q * &v;
        q.ger(-2.0 / vv, &qv, &v, 1.0);
    }
    q
}
