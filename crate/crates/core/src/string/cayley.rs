use nalgebra::DMatrix;

use super::{GeneratorSet, OrthogonalBasis};
use crate::error::{Error, Result};
use crate::linalg::{rotation_blocks, LuSolver, SkewMatrix};
use crate::rope::{FrequencySchedule, RopeEncoder};

/// `P = (I - S)(I + S)^-1`, one linear solve per column, no explicit inverse.
///
/// `(I - S)` and `(I + S)^-1` commute, so column `j` of `P` solves
/// `(I + S) x = (I - S) e_j`.
pub fn cayley_basis(s: &SkewMatrix) -> Result<OrthogonalBasis> {
    let d = s.dim();
    let plus = DMatrix::identity(d, d) + s.matrix();
    let solver = LuSolver::new(&plus)?;
    let mut p = DMatrix::zeros(d, d);
    let mut rhs = vec![0.0; d];
    for j in 0..d {
        for (i, v) in rhs.iter_mut().enumerate() {
            *v = if i == j { 1.0 } else { 0.0 } - s.matrix()[(i, j)];
        }
        let col = solver.solve(&rhs)?;
        p.set_column(j, &nalgebra::DVector::from_vec(col));
    }
    OrthogonalBasis::new(p)
}

/// Same transform through an explicitly formed inverse. Reference route only.
pub fn cayley_basis_via_inverse(s: &SkewMatrix) -> Result<DMatrix<f64>> {
    let d = s.dim();
    let eye = DMatrix::<f64>::identity(d, d);
    let inv = (&eye + s.matrix())
        .try_inverse()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    Ok((eye - s.matrix()) * inv)
}

/// RoPE preceded by a learned Cayley rotation.
///
/// `P` is built once at construction. Two application forms are exposed:
///
/// * [`CayleyEncoder::apply`]: `RoPE(r) P z`, enough for query-key dot
///   products since the leading basis change cancels.
/// * [`CayleyEncoder::apply_string`]: `P^T RoPE(r) P z`, the full encoding
///   `R(r) = exp(sum_k P^T L_k P r_k)` with `R(0) = I` and the group property.
///
/// Both give identical attention logits.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyEncoder {
    s: SkewMatrix,
    rope: RopeEncoder,
    p: OrthogonalBasis,
}

impl CayleyEncoder {
    pub fn new(s: SkewMatrix, schedule: FrequencySchedule) -> Result<Self> {
        if s.dim() != schedule.dim() {
            return Err(Error::DimensionMismatch {
                what: "Cayley skew parameter",
                expected: schedule.dim(),
                found: s.dim(),
            });
        }
        let p = cayley_basis(&s)?;
        Ok(Self {
            s,
            rope: RopeEncoder::new(schedule),
            p,
        })
    }

    pub fn dim(&self) -> usize {
        self.rope.dim()
    }

    pub fn coord_dim(&self) -> usize {
        self.rope.coord_dim()
    }

    pub fn skew(&self) -> &SkewMatrix {
        &self.s
    }

    pub fn schedule(&self) -> &FrequencySchedule {
        self.rope.schedule()
    }

    /// The cached `P_Cayley`.
    pub fn basis(&self) -> &OrthogonalBasis {
        &self.p
    }

    fn check_token(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "token",
                expected: self.dim(),
                found: z.len(),
            });
        }
        Ok(())
    }

    /// `RoPE(r) P z`
    pub fn apply(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_token(z)?;
        self.rope.apply(r, &self.p.apply(z))
    }

    /// `P^T RoPE(r) P z`
    pub fn apply_string(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.p.apply_transpose(&self.apply(r, z)?))
    }

    /// Dense `P^T RoPE(r) P`.
    pub fn matrix(&self, r: &[f64]) -> Result<DMatrix<f64>> {
        let p = self.p.matrix();
        Ok(p.transpose() * self.rope.matrix(r)? * p)
    }

    /// Generators `P^T L_k P` with `P` formed through an explicit inverse, so
    /// that the reference exponential shares no code with the solve path.
    pub fn reference_generators(&self) -> Result<GeneratorSet> {
        let p = cayley_basis_via_inverse(&self.s)?;
        let pt = p.transpose();
        let gens = self
            .schedule()
            .per_axis()
            .iter()
            .map(|axis| SkewMatrix::antisymmetrize(&(&pt * rotation_blocks(axis) * &p)))
            .collect();
        GeneratorSet::from_commuting(gens)
    }
}
