//! Rotary position encoding.
//!
//! Block `n` of a token (entries `2n`, `2n+1`) is rotated by
//! `rho(a) = [[cos a, -sin a], [sin a, cos a]]` with angle `a = sum_k r_k theta_{k,n}`.
//! Rotations of one block commute, so applying each axis in turn equals a
//! single rotation by the summed angle; the fast path uses the latter.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::all_finite;

pub const DEFAULT_BASE_WAVELENGTH: f64 = 10_000.0;

/// Per-axis rotation frequencies, `d/2` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySchedule {
    per_axis: Vec<Vec<f64>>,
    base_wavelength: f64,
}

/// `theta_n = lambda^(-2(n-1)/d)` for `n = 1..d/2`, replicated over `coord_dim` axes.
pub fn default_schedule(dim: usize, base_wavelength: f64, coord_dim: usize) -> Result<FrequencySchedule> {
    if dim % 2 != 0 || dim == 0 {
        return Err(Error::OddDimension(dim));
    }
    if !(base_wavelength > 0.0 && base_wavelength.is_finite()) {
        return Err(Error::Config(format!(
            "base wavelength must be positive, got {base_wavelength}"
        )));
    }
    if coord_dim == 0 {
        return Err(Error::Config("coordinate dimension must be at least 1".into()));
    }
    let axis: Vec<f64> = (0..dim / 2)
        .map(|n| base_wavelength.powf(-2.0 * n as f64 / dim as f64))
        .collect();
    Ok(FrequencySchedule {
        per_axis: vec![axis; coord_dim],
        base_wavelength,
    })
}

impl FrequencySchedule {
    /// Explicit (e.g. learned) frequencies. Axes may differ but must share a length.
    pub fn from_axes(per_axis: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = per_axis.first() else {
            return Err(Error::Config("schedule needs at least one axis".into()));
        };
        let half = first.len();
        if half == 0 {
            return Err(Error::Config("schedule axes must be non-empty".into()));
        }
        for axis in &per_axis {
            if axis.len() != half {
                return Err(Error::DimensionMismatch {
                    what: "schedule axis",
                    expected: half,
                    found: axis.len(),
                });
            }
            if !all_finite(axis) {
                return Err(Error::NonFinite("frequency schedule"));
            }
        }
        Ok(Self {
            per_axis,
            base_wavelength: DEFAULT_BASE_WAVELENGTH,
        })
    }

    pub fn zeros(dim: usize, coord_dim: usize) -> Result<Self> {
        if dim % 2 != 0 || dim == 0 {
            return Err(Error::OddDimension(dim));
        }
        Self::from_axes(vec![vec![0.0; dim / 2]; coord_dim])
    }

    pub fn dim(&self) -> usize {
        2 * self.per_axis[0].len()
    }

    pub fn coord_dim(&self) -> usize {
        self.per_axis.len()
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.per_axis[k]
    }

    pub fn per_axis(&self) -> &[Vec<f64>] {
        &self.per_axis
    }

    pub fn base_wavelength(&self) -> f64 {
        self.base_wavelength
    }

    /// Flattened axis-major view, for parameter perturbation.
    pub fn flat(&self) -> Vec<f64> {
        self.per_axis.iter().flatten().copied().collect()
    }

    pub fn with_flat(&self, flat: &[f64]) -> Result<Self> {
        let half = self.dim() / 2;
        if flat.len() != half * self.coord_dim() {
            return Err(Error::DimensionMismatch {
                what: "flattened schedule",
                expected: half * self.coord_dim(),
                found: flat.len(),
            });
        }
        let mut out = Self::from_axes(flat.chunks(half).map(<[f64]>::to_vec).collect())?;
        out.base_wavelength = self.base_wavelength;
        Ok(out)
    }

    /// Block angles `a_n = sum_k r_k theta_{k,n}`.
    pub fn angles(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim() / 2];
        for (rk, axis) in r.iter().zip(&self.per_axis) {
            for (a, th) in out.iter_mut().zip(axis) {
                *a += rk * th;
            }
        }
        out
    }
}

/// Rotates each pair `(z[2n], z[2n+1])` by `angles[n]`.
pub fn rotate_pairs(z: &[f64], angles: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    for ((o, pair), &a) in out.chunks_exact_mut(2).zip(z.chunks_exact(2)).zip(angles) {
        let (s, c) = a.sin_cos();
        o[0] = c * pair[0] - s * pair[1];
        o[1] = s * pair[0] + c * pair[1];
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RopeEncoder {
    schedule: FrequencySchedule,
}

impl RopeEncoder {
    pub fn new(schedule: FrequencySchedule) -> Self {
        Self { schedule }
    }

    /// Encoder whose every rotation is the identity.
    pub fn identity(dim: usize, coord_dim: usize) -> Result<Self> {
        Ok(Self::new(FrequencySchedule::zeros(dim, coord_dim)?))
    }

    pub fn dim(&self) -> usize {
        self.schedule.dim()
    }

    pub fn coord_dim(&self) -> usize {
        self.schedule.coord_dim()
    }

    pub fn schedule(&self) -> &FrequencySchedule {
        &self.schedule
    }

    fn check(&self, r: &[f64], z: Option<&[f64]>) -> Result<()> {
        if r.len() != self.coord_dim() {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: self.coord_dim(),
                found: r.len(),
            });
        }
        if let Some(z) = z {
            if z.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    what: "token",
                    expected: self.dim(),
                    found: z.len(),
                });
            }
        }
        Ok(())
    }

    /// One-dimensional RoPE at scalar position `i`; requires `coord_dim == 1`.
    pub fn apply_1d(&self, position: f64, z: &[f64]) -> Result<Vec<f64>> {
        if self.coord_dim() != 1 {
            return Err(Error::DimensionMismatch {
                what: "coordinate dimension for 1D RoPE",
                expected: 1,
                found: self.coord_dim(),
            });
        }
        self.apply(&[position], z)
    }

    pub fn apply(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check(r, Some(z))?;
        Ok(rotate_pairs(z, &self.schedule.angles(r)))
    }

    /// Dense `d x d` materialization; non-zero only on the 2x2 diagonal blocks.
    pub fn matrix(&self, r: &[f64]) -> Result<DMatrix<f64>> {
        self.check(r, None)?;
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (n, a) in self.schedule.angles(r).into_iter().enumerate() {
            let (s, c) = a.sin_cos();
            m[(2 * n, 2 * n)] = c;
            m[(2 * n, 2 * n + 1)] = -s;
            m[(2 * n + 1, 2 * n)] = s;
            m[(2 * n + 1, 2 * n + 1)] = c;
        }
        Ok(m)
    }
}
