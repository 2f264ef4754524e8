use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::seq::SliceRandom;

use super::{max_abs, max_abs_diff, orthogonality_residual, SkewMatrix};
use crate::error::{Error, Result};
use crate::random;

/// Orthogonal basis `P` and plane frequencies with
/// `L = P * blockdiag([[0, -theta_p], [theta_p, 0]]) * P^T`.
///
/// Column pairs `(2p, 2p+1)` span plane `p`. Frequencies are non-negative and
/// sorted in descending order; zero-frequency planes come last.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneDecomposition {
    basis: DMatrix<f64>,
    frequencies: Vec<f64>,
}

impl PlaneDecomposition {
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn into_parts(self) -> (DMatrix<f64>, Vec<f64>) {
        (self.basis, self.frequencies)
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let blocks = rotation_blocks(&self.frequencies);
        &self.basis * blocks * self.basis.transpose()
    }
}

/// Block-diagonal skew matrix with blocks `[[0, -theta], [theta, 0]]`.
///
/// This is the generator of `rho(r * theta)` for the RoPE rotation
/// `rho(a) = [[cos a, -sin a], [sin a, cos a]]`.
pub fn rotation_blocks(frequencies: &[f64]) -> DMatrix<f64> {
    let d = 2 * frequencies.len();
    let mut m = DMatrix::zeros(d, d);
    for (p, &theta) in frequencies.iter().enumerate() {
        m[(2 * p, 2 * p + 1)] = -theta;
        m[(2 * p + 1, 2 * p)] = theta;
    }
    m
}

fn orthogonalize(v: &mut DVector<f64>, against: &[DVector<f64>]) {
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for q in against {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

/// Decomposes a skew matrix into independent rotation planes.
///
/// Eigenpairs come from the Hermitian matrix `iL`: an eigenvector
/// `v = x + iy` with eigenvalue `theta > 0` satisfies `L x = theta y` and
/// `L y = -theta x`, so `(sqrt 2 x, sqrt 2 y)` spans a rotation plane. The
/// plane is rebuilt in real arithmetic (`u` orthonormalized, then
/// `w = L u / theta`) to keep `P` orthogonal to machine precision.
///
/// Eigenvalues within `1e-8 * max(1, max |L|)` of each other form a cluster;
/// their order inside the cluster is shuffled by `tiebreak_seed` before
/// orthonormalization. The kernel is spanned by projecting the standard basis
/// vectors onto it with column pivoting, so `L = 0` yields `P = I`.
pub fn plane_decompose(l: &SkewMatrix, tiebreak_seed: u64) -> Result<PlaneDecomposition> {
    let d = l.dim();
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    let a = l.matrix();
    if d == 0 {
        return Ok(PlaneDecomposition {
            basis: DMatrix::zeros(0, 0),
            frequencies: Vec::new(),
        });
    }
    let scale = max_abs(a).max(1.0);
    let zero_tol = 1e-10 * scale * d as f64;
    let cluster_tol = 1e-8 * scale;

    let h = DMatrix::<Complex64>::from_fn(d, d, |i, j| Complex64::new(0.0, a[(i, j)]));
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 1000 * d).ok_or(
        Error::DecompositionFailed {
            residual: f64::INFINITY,
        },
    )?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let positive = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > zero_tol)
        .count()
        .min(d / 2);

    let mut plane_order: Vec<usize> = order[..positive].to_vec();
    let mut rng = random::rng(tiebreak_seed);
    let mut start = 0;
    while start < plane_order.len() {
        let lead = eig.eigenvalues[plane_order[start]];
        let mut end = start + 1;
        while end < plane_order.len() && lead - eig.eigenvalues[plane_order[end]] <= cluster_tol {
            end += 1;
        }
        plane_order[start..end].shuffle(&mut rng);
        start = end;
    }

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut frequencies = Vec::with_capacity(d / 2);
    for &idx in &plane_order {
        let v = eig.eigenvectors.column(idx);
        let theta0 = eig.eigenvalues[idx];
        let mut u = DVector::from_iterator(d, v.iter().map(|c| c.re * std::f64::consts::SQRT_2));
        if u.norm() < 0.5 {
            // Phase put most of the vector in the imaginary part.
            u = DVector::from_iterator(d, v.iter().map(|c| c.im * std::f64::consts::SQRT_2));
        }
        orthogonalize(&mut u, &cols);
        u.normalize_mut();
        let mut w = (a * &u) / theta0;
        cols.push(u);
        orthogonalize(&mut w, &cols);
        w.normalize_mut();
        let theta = w.dot(&(a * &cols[cols.len() - 1]));
        cols.push(w);
        frequencies.push(theta);
    }

    let kernel_dim = d - 2 * positive;
    if kernel_dim > 0 {
        let zero_idx = &order[positive..d - positive];
        let v0 = DMatrix::<Complex64>::from_fn(d, zero_idx.len(), |i, j| {
            eig.eigenvectors[(i, zero_idx[j])]
        });
        let projector = (&v0 * v0.adjoint()).map(|c| c.re);
        let mut candidates: Vec<DVector<f64>> =
            projector.column_iter().map(|c| c.into_owned()).collect();
        for _ in 0..kernel_dim {
            for c in candidates.iter_mut() {
                orthogonalize(c, &cols);
            }
            let (best, _) = candidates
                .iter()
                .enumerate()
                .fold((0, -1.0_f64), |acc, (j, c)| {
                    let n = c.norm();
                    if n > acc.1 {
                        (j, n)
                    } else {
                        acc
                    }
                });
            let mut q = candidates[best].clone();
            q.normalize_mut();
            cols.push(q);
        }
        frequencies.extend(std::iter::repeat_n(0.0, kernel_dim / 2));
    }

    let basis = DMatrix::from_columns(&cols);
    let decomposition = PlaneDecomposition { basis, frequencies };
    let orth = orthogonality_residual(&decomposition.basis);
    let residual = max_abs_diff(&decomposition.reconstruct(), a);
    if orth > 1e-10 || residual > 1e-8 * scale {
        return Err(Error::DecompositionFailed {
            residual: residual.max(orth),
        });
    }
    Ok(decomposition)
}
