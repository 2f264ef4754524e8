use nalgebra::DMatrix;

use super::GeneratorSet;
use crate::error::{Error, Result};
use crate::linalg::{matvec, matvec_transpose, max_abs, orthogonality_residual, plane_decompose, SkewMatrix};
use crate::random::{gaussian_vec, rng};
use crate::rope::FrequencySchedule;

/// `d x d` real orthogonal matrix, `|P^T P - I| <= 1e-10`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalBasis {
    p: DMatrix<f64>,
}

impl OrthogonalBasis {
    pub fn new(p: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = p.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let residual = orthogonality_residual(&p);
        if !(residual <= 1e-10) {
            return Err(Error::NotOrthogonal(residual));
        }
        Ok(Self { p })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            p: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn transpose(&self) -> Self {
        Self {
            p: self.p.transpose(),
        }
    }

    /// `P z`
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        matvec(&self.p, z)
    }

    /// `P^T z`
    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        matvec_transpose(&self.p, z)
    }
}

pub const EXTRACTION_ATTEMPTS: usize = 8;
const BLOCK_TOL: f64 = 1e-8;

/// Recovers `P` and per-axis frequencies with `R(r) = P RoPE(r) P^T`.
///
/// Commuting skew generators are simultaneously block-diagonalized by the
/// plane basis of a generic combination `sum_k alpha_k L_k` with Gaussian
/// `alpha`. Each `P^T L_k P` is then checked to be block-diagonal and its
/// blocks read off as frequencies (signs included; a plane's orientation is
/// fixed by the combination). An unlucky `alpha` that merges distinct planes
/// shows up as an off-block residual and triggers a redraw.
pub fn extract_basis(gens: &GeneratorSet, seed: u64) -> Result<(OrthogonalBasis, FrequencySchedule)> {
    let d = gens.dim();
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    let mut last_failure = Error::BasisExtraction {
        attempts: 0,
        generator: 0,
        row: 0,
        col: 0,
        residual: f64::INFINITY,
    };
    for attempt in 0..EXTRACTION_ATTEMPTS as u64 {
        let mut r = rng(seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let alpha = gaussian_vec(&mut r, gens.coord_dim());
        let combo = SkewMatrix::antisymmetrize(&gens.combination(&alpha)?);
        let decomposition = match plane_decompose(&combo, seed) {
            Ok(dec) => dec,
            Err(Error::DecompositionFailed { residual }) => {
                last_failure = Error::BasisExtraction {
                    attempts: attempt as usize + 1,
                    generator: 0,
                    row: 0,
                    col: 0,
                    residual,
                };
                continue;
            }
            Err(e) => return Err(e),
        };
        let p = decomposition.basis();
        let pt = p.transpose();

        let mut per_axis = Vec::with_capacity(gens.coord_dim());
        let mut worst: Option<(usize, usize, usize, f64)> = None;
        for (k, g) in gens.generators().iter().enumerate() {
            let block = &pt * g.matrix() * p;
            let tol = BLOCK_TOL * max_abs(g.matrix()).max(1.0);
            for i in 0..d {
                for j in 0..d {
                    if i / 2 != j / 2 && block[(i, j)].abs() > tol {
                        let res = block[(i, j)].abs();
                        if worst.is_none_or(|w| res > w.3) {
                            worst = Some((k, i, j, res));
                        }
                    }
                }
            }
            per_axis.push(
                (0..d / 2)
                    .map(|q| 0.5 * (block[(2 * q + 1, 2 * q)] - block[(2 * q, 2 * q + 1)]))
                    .collect(),
            );
        }
        match worst {
            None => {
                let basis = OrthogonalBasis::new(p.clone())?;
                return Ok((basis, FrequencySchedule::from_axes(per_axis)?));
            }
            Some((generator, row, col, residual)) => {
                last_failure = Error::BasisExtraction {
                    attempts: attempt as usize + 1,
                    generator,
                    row,
                    col,
                    residual,
                };
            }
        }
    }
    Err(last_failure)
}
