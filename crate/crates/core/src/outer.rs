//! Outer-product encoding with Fourier position features.
//!
//! `f(r) = m^{-1/2} [cos(w_1 . r), sin(w_1 . r), ..., cos(w_m . r), sin(w_m . r)]`
//! and a token becomes `vec(f(r) (x) z)`, flattened feature-major: entry
//! `d * a + b` is `f_a z_b`. Dot products of encoded tokens factor as
//! `(q . k) (f(r_i) . f(r_j))`, and the second factor depends only on `r_i - r_j`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, dot};
use crate::random::gaussian_vec;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierFeatureMap {
    coord_dim: usize,
    frequencies: Vec<Vec<f64>>,
}

impl FourierFeatureMap {
    pub fn new(frequencies: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = frequencies.first() else {
            return Err(Error::Config("feature map needs at least one frequency".into()));
        };
        let coord_dim = first.len();
        for w in &frequencies {
            if w.len() != coord_dim {
                return Err(Error::DimensionMismatch {
                    what: "frequency vector",
                    expected: coord_dim,
                    found: w.len(),
                });
            }
            if !all_finite(w) {
                return Err(Error::NonFinite("feature frequencies"));
            }
        }
        Ok(Self {
            coord_dim,
            frequencies,
        })
    }

    /// Standard Gaussian frequencies.
    pub fn gaussian(rng: &mut impl Rng, num_features: usize, coord_dim: usize) -> Result<Self> {
        Self::new((0..num_features).map(|_| gaussian_vec(rng, coord_dim)).collect())
    }

    pub fn num_features(&self) -> usize {
        self.frequencies.len()
    }

    pub fn coord_dim(&self) -> usize {
        self.coord_dim
    }

    pub fn feature_dim(&self) -> usize {
        2 * self.num_features()
    }

    pub fn frequencies(&self) -> &[Vec<f64>] {
        &self.frequencies
    }

    pub fn features(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.coord_dim {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: self.coord_dim,
                found: r.len(),
            });
        }
        let norm = 1.0 / (self.num_features() as f64).sqrt();
        let mut out = Vec::with_capacity(self.feature_dim());
        for w in &self.frequencies {
            let (s, c) = dot(w, r).sin_cos();
            out.push(c * norm);
            out.push(s * norm);
        }
        Ok(out)
    }
}

pub fn fourier_features(map: &FourierFeatureMap, r: &[f64]) -> Result<Vec<f64>> {
    map.features(r)
}

/// Flattened `f (x) z` with entry `d * a + b = f_a z_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterEncodedToken {
    token_dim: usize,
    entries: Vec<f64>,
}

impl OuterEncodedToken {
    pub fn token_dim(&self) -> usize {
        self.token_dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<f64> {
        self.entries
    }

    pub fn get(&self, feature: usize, component: usize) -> f64 {
        self.entries[self.token_dim * feature + component]
    }
}

pub fn outer_encode(map: &FourierFeatureMap, r: &[f64], z: &[f64]) -> Result<OuterEncodedToken> {
    let f = map.features(r)?;
    let mut entries = Vec::with_capacity(f.len() * z.len());
    for fa in &f {
        entries.extend(z.iter().map(|zb| fa * zb));
    }
    Ok(OuterEncodedToken {
        token_dim: z.len(),
        entries,
    })
}

/// Outer-product encoder for tokens of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterEncoder {
    dim: usize,
    map: FourierFeatureMap,
}

impl OuterEncoder {
    pub fn new(dim: usize, map: FourierFeatureMap) -> Self {
        Self { dim, map }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn map(&self) -> &FourierFeatureMap {
        &self.map
    }

    pub fn output_dim(&self) -> usize {
        self.map.feature_dim() * self.dim
    }

    pub fn apply(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "token",
                expected: self.dim,
                found: z.len(),
            });
        }
        Ok(outer_encode(&self.map, r, z)?.into_entries())
    }
}
