//! Generator-exponential position encodings `R(r) = exp(sum_k L_k r_k)`.
//!
//! [`GeneratorSet`] holds commuting skew generators and materializes `R(r)`
//! densely. [`extract_basis`] recovers the orthogonal change of basis that
//! turns any such set into RoPE. The Cayley and circulant encoders are the
//! two parameterizations with fast application paths.

mod basis;
mod cayley;
mod circulant;
mod generators;

pub use basis::{extract_basis, OrthogonalBasis, EXTRACTION_ATTEMPTS};
pub use cayley::{cayley_basis, cayley_basis_via_inverse, CayleyEncoder};
pub use circulant::{
    block_circulant_generators, circulant_generators, generator_spectrum, CirculantEncoder,
    SpectrumConvention, FROZEN_CONVENTION,
};
pub use generators::{rope_generators, string_matrix, GeneratorSet, COMMUTATION_TOL};
