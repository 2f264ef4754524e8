//! A single entry point over every encoding variant.

use nalgebra::DMatrix;

use crate::batch::PositionedTokenBatch;
use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, matvec, SkewMatrix};
use crate::outer::{FourierFeatureMap, OuterEncoder};
use crate::parallel::{try_map_range, Execution};
use crate::rope::{FrequencySchedule, RopeEncoder};
use crate::string::{
    extract_basis, rope_generators, string_matrix, CayleyEncoder, CirculantEncoder, GeneratorSet, OrthogonalBasis,
};

/// Anything that maps `(position, token)` to an encoded token.
pub trait PositionEncoder: Sync {
    fn position_dim(&self) -> usize;
    fn token_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn encode(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>>;
}

/// General STRING encoder `R(r) = exp(sum_k L_k r_k)`, applied by
/// materializing `R(r)` and multiplying.
///
/// A planted encoder stores `P` and a schedule with `L_k = P J_k P^T`; its
/// materialization is `P RoPE(r) P^T`, one dense product. Otherwise `R(r)`
/// comes from the matrix exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseEncoder {
    generators: GeneratorSet,
    planted: Option<(OrthogonalBasis, FrequencySchedule)>,
}

impl DenseEncoder {
    pub fn new(generators: GeneratorSet) -> Self {
        Self {
            generators,
            planted: None,
        }
    }

    pub fn planted(basis: OrthogonalBasis, schedule: FrequencySchedule) -> Result<Self> {
        if basis.dim() != schedule.dim() {
            return Err(Error::DimensionMismatch {
                what: "planted basis",
                expected: schedule.dim(),
                found: basis.dim(),
            });
        }
        let generators = GeneratorSet::planted(basis.matrix(), &schedule)?;
        Ok(Self {
            generators,
            planted: Some((basis, schedule)),
        })
    }

    pub fn dim(&self) -> usize {
        self.generators.dim()
    }

    pub fn coord_dim(&self) -> usize {
        self.generators.coord_dim()
    }

    pub fn generators(&self) -> &GeneratorSet {
        &self.generators
    }

    pub fn planted_parts(&self) -> Option<(&OrthogonalBasis, &FrequencySchedule)> {
        self.planted.as_ref().map(|(b, s)| (b, s))
    }

    pub fn matrix(&self, r: &[f64]) -> Result<DMatrix<f64>> {
        let Some((basis, schedule)) = &self.planted else {
            return string_matrix(&self.generators, r);
        };
        if r.len() != schedule.coord_dim() {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: schedule.coord_dim(),
                found: r.len(),
            });
        }
        // P RoPE(r): rotate column pairs of P in place, then one dense product.
        let p = basis.matrix();
        let mut pr = p.clone();
        for (n, a) in schedule.angles(r).into_iter().enumerate() {
            let (s, c) = a.sin_cos();
            for i in 0..pr.nrows() {
                let (x, y) = (p[(i, 2 * n)], p[(i, 2 * n + 1)]);
                pr[(i, 2 * n)] = c * x + s * y;
                pr[(i, 2 * n + 1)] = c * y - s * x;
            }
        }
        Ok(pr * p.transpose())
    }

    pub fn apply(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "token",
                expected: self.dim(),
                found: z.len(),
            });
        }
        Ok(matvec(&self.matrix(r)?, z))
    }
}

/// Which computation produces `R(r) z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyPath {
    /// The variant's own structured algorithm.
    Fast,
    /// Matrix exponential of independently built dense generators.
    DenseOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Dense(DenseEncoder),
    Rope(RopeEncoder),
    Cayley(CayleyEncoder),
    Circulant(CirculantEncoder),
    Outer(OuterEncoder),
}

impl Encoder {
    /// RoPE with an all-zero schedule: `R(r) = I`.
    pub fn identity(dim: usize, coord_dim: usize) -> Result<Self> {
        Ok(Encoder::Rope(RopeEncoder::identity(dim, coord_dim)?))
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Encoder::Dense(_) => "dense",
            Encoder::Rope(_) => "rope",
            Encoder::Cayley(_) => "cayley",
            Encoder::Circulant(_) => "circulant",
            Encoder::Outer(_) => "outer",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Encoder::Dense(e) => e.dim(),
            Encoder::Rope(e) => e.dim(),
            Encoder::Cayley(e) => e.dim(),
            Encoder::Circulant(e) => e.dim(),
            Encoder::Outer(e) => e.dim(),
        }
    }

    pub fn coord_dim(&self) -> usize {
        match self {
            Encoder::Dense(e) => e.coord_dim(),
            Encoder::Rope(e) => e.coord_dim(),
            Encoder::Cayley(e) => e.coord_dim(),
            Encoder::Circulant(e) => e.coord_dim(),
            Encoder::Outer(e) => e.map().coord_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Encoder::Outer(e) => e.output_dim(),
            _ => self.dim(),
        }
    }

    /// True when the encoding is `z -> R(r) z` for an orthogonal `R(r)`.
    pub fn is_multiplicative(&self) -> bool {
        !matches!(self, Encoder::Outer(_))
    }

    pub fn apply(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        match self {
            Encoder::Dense(e) => e.apply(r, z),
            Encoder::Rope(e) => e.apply(r, z),
            Encoder::Cayley(e) => e.apply_string(r, z),
            Encoder::Circulant(e) => e.apply(r, z),
            Encoder::Outer(e) => e.apply(r, z),
        }
    }

    pub fn apply_path(&self, path: ApplyPath, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        match (path, self) {
            (ApplyPath::Fast, _) | (ApplyPath::DenseOracle, Encoder::Outer(_)) => self.apply(r, z),
            (ApplyPath::DenseOracle, _) => {
                if z.len() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        what: "token",
                        expected: self.dim(),
                        found: z.len(),
                    });
                }
                Ok(matvec(&self.oracle_matrix(r)?, z))
            }
        }
    }

    /// Dense `R(r)` consistent with [`Encoder::apply`].
    pub fn matrix(&self, r: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            Encoder::Dense(e) => e.matrix(r),
            Encoder::Rope(e) => e.matrix(r),
            Encoder::Cayley(e) => e.matrix(r),
            Encoder::Circulant(e) => e.matrix(r),
            Encoder::Outer(_) => Err(Error::NotMultiplicative),
        }
    }

    /// Dense generators built without the fast path's structure.
    pub fn reference_generators(&self) -> Result<GeneratorSet> {
        match self {
            Encoder::Dense(e) => Ok(e.generators().clone()),
            Encoder::Rope(e) => Ok(rope_generators(e.schedule())),
            Encoder::Cayley(e) => e.reference_generators(),
            Encoder::Circulant(e) => Ok(e.generators()),
            Encoder::Outer(_) => Err(Error::NotMultiplicative),
        }
    }

    /// `exp(sum_k L_k r_k)` from [`Encoder::reference_generators`].
    pub fn oracle_matrix(&self, r: &[f64]) -> Result<DMatrix<f64>> {
        let gens = self.reference_generators()?;
        matrix_exp(&gens.combination(r)?)
    }

    /// `(P, schedule)` with `R(r) = P RoPE(r) P^T`.
    ///
    /// Closed form where the variant stores it, otherwise extracted from the
    /// generators with `seed` driving the randomized extraction.
    pub fn string_basis(&self, seed: u64) -> Result<(OrthogonalBasis, FrequencySchedule)> {
        match self {
            Encoder::Dense(e) => match e.planted_parts() {
                Some((b, s)) => Ok((b.clone(), s.clone())),
                None => extract_basis(e.generators(), seed),
            },
            Encoder::Rope(e) => Ok((OrthogonalBasis::identity(e.dim()), e.schedule().clone())),
            Encoder::Cayley(e) => Ok((e.basis().transpose(), e.schedule().clone())),
            Encoder::Circulant(e) => extract_basis(&e.generators(), seed),
            Encoder::Outer(_) => Err(Error::NotMultiplicative),
        }
    }

    /// Bytes of numeric state held by the encoder.
    pub fn state_bytes(&self) -> usize {
        const F: usize = std::mem::size_of::<f64>();
        match self {
            Encoder::Dense(e) => {
                let planted = e.planted_parts().map_or(0, |(b, s)| b.dim() * b.dim() + s.flat().len());
                (e.coord_dim() * e.dim() * e.dim() + planted) * F
            }
            Encoder::Rope(e) => e.schedule().flat().len() * F,
            Encoder::Cayley(e) => (e.dim() * e.dim() + e.schedule().flat().len()) * F,
            Encoder::Circulant(e) => e.state_bytes(),
            Encoder::Outer(e) => e.map().num_features() * e.map().coord_dim() * F,
        }
    }

    /// Learnable parameters, flattened.
    ///
    /// * rope: schedule, axis-major
    /// * dense: schedule of a planted encoder, none otherwise
    /// * cayley: strict upper triangle of `S` (row-major), then the schedule
    /// * circulant: circulant rows, axis-major
    /// * outer: frequency vectors, feature-major
    pub fn params(&self) -> Vec<f64> {
        match self {
            Encoder::Dense(e) => e.planted_parts().map_or_else(Vec::new, |(_, s)| s.flat()),
            Encoder::Rope(e) => e.schedule().flat(),
            Encoder::Cayley(e) => {
                let mut v = e.skew().upper();
                v.extend(e.schedule().flat());
                v
            }
            Encoder::Circulant(e) => e.rows().iter().flatten().copied().collect(),
            Encoder::Outer(e) => e.map().frequencies().iter().flatten().copied().collect(),
        }
    }

    /// Same structure with parameters replaced, in the layout of [`Encoder::params`].
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        let expected = self.params().len();
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected,
                found: params.len(),
            });
        }
        Ok(match self {
            Encoder::Dense(e) => match e.planted_parts() {
                Some((b, s)) => Encoder::Dense(DenseEncoder::planted(b.clone(), s.with_flat(params)?)?),
                None => self.clone(),
            },
            Encoder::Rope(e) => Encoder::Rope(RopeEncoder::new(e.schedule().with_flat(params)?)),
            Encoder::Cayley(e) => {
                let n = e.skew().upper().len();
                let s = SkewMatrix::from_upper(e.dim(), &params[..n])?;
                Encoder::Cayley(CayleyEncoder::new(s, e.schedule().with_flat(&params[n..])?)?)
            }
            Encoder::Circulant(e) => {
                let rows = params.chunks(e.dim()).map(<[f64]>::to_vec).collect();
                Encoder::Circulant(CirculantEncoder::with_block_size(rows, e.block_size())?)
            }
            Encoder::Outer(e) => {
                let dc = e.map().coord_dim();
                let freqs = params.chunks(dc).map(<[f64]>::to_vec).collect();
                Encoder::Outer(OuterEncoder::new(e.dim(), FourierFeatureMap::new(freqs)?))
            }
        })
    }
}

impl PositionEncoder for Encoder {
    fn position_dim(&self) -> usize {
        self.coord_dim()
    }

    fn token_dim(&self) -> usize {
        self.dim()
    }

    fn output_dim(&self) -> usize {
        Encoder::output_dim(self)
    }

    fn encode(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.apply(r, z)
    }
}

impl PositionEncoder for RopeEncoder {
    fn position_dim(&self) -> usize {
        self.coord_dim()
    }

    fn token_dim(&self) -> usize {
        self.dim()
    }

    fn output_dim(&self) -> usize {
        self.dim()
    }

    fn encode(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.apply(r, z)
    }
}

/// An [`Encoder`] pinned to one [`ApplyPath`].
#[derive(Debug, Clone, Copy)]
pub struct PathEncoder<'a> {
    pub encoder: &'a Encoder,
    pub path: ApplyPath,
}

impl PositionEncoder for PathEncoder<'_> {
    fn position_dim(&self) -> usize {
        self.encoder.coord_dim()
    }

    fn token_dim(&self) -> usize {
        self.encoder.dim()
    }

    fn output_dim(&self) -> usize {
        self.encoder.output_dim()
    }

    fn encode(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.encoder.apply_path(self.path, r, z)
    }
}

/// Encodes every token at its position, preserving order; positions pass
/// through unchanged.
pub fn encode_batch<E: PositionEncoder + ?Sized>(enc: &E, batch: &PositionedTokenBatch) -> Result<PositionedTokenBatch> {
    encode_batch_with(enc, batch, Execution::default())
}

pub fn encode_batch_with<E: PositionEncoder + ?Sized>(
    enc: &E,
    batch: &PositionedTokenBatch,
    exec: Execution,
) -> Result<PositionedTokenBatch> {
    let (tokens, positions) = (batch.tokens(), batch.positions());
    let encoded = try_map_range(batch.len(), exec, |i| enc.encode(&positions[i], &tokens[i]))?;
    PositionedTokenBatch::new(encoded, positions.to_vec())
}
