//! Position encodings built from exponentials of commuting skew-symmetric
//! generators, `R(r) = exp(sum_k L_k r_k)`, with RoPE as the block-diagonal
//! special case.
//!
//! Variants:
//!
//! * [`rope::RopeEncoder`]: rotations on coordinate pairs.
//! * [`string::CayleyEncoder`]: RoPE in a basis `P = (I - S)(I + S)^{-1}`.
//! * [`string::CirculantEncoder`]: circulant generators applied through the FFT
//!   in `O(d log d)`.
//! * [`encoder::DenseEncoder`]: arbitrary commuting generators, materialized.
//! * [`outer::OuterEncoder`]: Fourier position features combined with the
//!   token by outer product.
//!
//! [`encoder::Encoder`] wraps all of them behind one interface used by the
//! attention harness in [`attention`].

pub mod attention;
pub mod batch;
pub mod config;
pub mod coords;
pub mod encoder;
pub mod error;
pub mod linalg;
pub mod outer;
pub mod parallel;
pub mod random;
pub mod rope;
pub mod string;

pub use batch::PositionedTokenBatch;
pub use encoder::{encode_batch, encode_batch_with, ApplyPath, DenseEncoder, Encoder, PositionEncoder};
pub use error::{Error, Result};
