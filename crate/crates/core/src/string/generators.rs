use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, max_abs, max_abs_diff, rotation_blocks, SkewMatrix};
use crate::rope::FrequencySchedule;

/// Commutator bound, relative to `max(1, |L_i| |L_j|)` in max-abs norm.
pub const COMMUTATION_TOL: f64 = 1e-10;

/// Commuting skew-symmetric generators, one per coordinate axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSet {
    dim: usize,
    generators: Vec<SkewMatrix>,
}

impl GeneratorSet {
    /// Checks shapes and pairwise commutation.
    pub fn new(generators: Vec<SkewMatrix>) -> Result<Self> {
        let set = Self::from_commuting(generators)?;
        for i in 0..set.generators.len() {
            for j in (i + 1)..set.generators.len() {
                let (a, b) = (set.generators[i].matrix(), set.generators[j].matrix());
                let residual = max_abs_diff(&(a * b), &(b * a));
                let scale = (max_abs(a) * max_abs(b)).max(1.0);
                if residual > COMMUTATION_TOL * scale {
                    return Err(Error::NonCommuting { i, j, residual });
                }
            }
        }
        Ok(set)
    }

    /// For families that commute by construction (block-diagonal, circulant,
    /// conjugated by a shared basis). Shapes are still checked.
    pub(crate) fn from_commuting(generators: Vec<SkewMatrix>) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::Config("generator set needs at least one axis".into()));
        };
        let dim = first.dim();
        for g in &generators {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    what: "generator",
                    expected: dim,
                    found: g.dim(),
                });
            }
        }
        Ok(Self { dim, generators })
    }

    /// `P * blockdiag(theta_k) * P^T` for each axis `k`: the general form of a
    /// commuting family (every instance is RoPE in some basis).
    pub fn planted(basis: &DMatrix<f64>, schedule: &FrequencySchedule) -> Result<Self> {
        if basis.nrows() != schedule.dim() || basis.ncols() != schedule.dim() {
            return Err(Error::DimensionMismatch {
                what: "basis",
                expected: schedule.dim(),
                found: basis.nrows(),
            });
        }
        let pt = basis.transpose();
        let gens = schedule
            .per_axis()
            .iter()
            .map(|axis| SkewMatrix::antisymmetrize(&(basis * rotation_blocks(axis) * &pt)))
            .collect();
        Self::from_commuting(gens)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coord_dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[SkewMatrix] {
        &self.generators
    }

    /// `sum_k L_k r_k`.
    pub fn combination(&self, r: &[f64]) -> Result<DMatrix<f64>> {
        if r.len() != self.coord_dim() {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: self.coord_dim(),
                found: r.len(),
            });
        }
        let mut sum = DMatrix::zeros(self.dim, self.dim);
        for (g, &rk) in self.generators.iter().zip(r) {
            sum += g.matrix() * rk;
        }
        Ok(sum)
    }
}

/// `R(r) = exp(sum_k L_k r_k)` via the reference matrix exponential.
pub fn string_matrix(gens: &GeneratorSet, r: &[f64]) -> Result<DMatrix<f64>> {
    matrix_exp(&gens.combination(r)?)
}

/// Block-diagonal generators whose exponential is multidimensional RoPE.
///
/// Axis `k` gets `theta_{k,p}` at entry `(2p+1, 2p)` and `-theta_{k,p}` at
/// `(2p, 2p+1)`, matching `rho(a) = [[cos a, -sin a], [sin a, cos a]]`.
pub fn rope_generators(schedule: &FrequencySchedule) -> GeneratorSet {
    let gens = schedule
        .per_axis()
        .iter()
        .map(|axis| {
            SkewMatrix::from_matrix(&rotation_blocks(axis)).expect("rotation blocks are skew")
        })
        .collect();
    GeneratorSet::from_commuting(gens).expect("schedule axes share a dimension")
}
