use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Real skew-symmetric matrix, `A^T = -A` exactly.
///
/// Construction either fills the strict upper triangle and mirrors it, or
/// antisymmetrizes a matrix that is already skew to within rounding, so the
/// stored entries satisfy `a[(i, j)] == -a[(j, i)]` bit for bit and the
/// diagonal is zero.
///
/// Odd dimensions are allowed here (odd circulant generators exist); the plane
/// decomposition and RoPE-form code paths reject them.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix {
    a: DMatrix<f64>,
}

impl SkewMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(dim, dim),
        }
    }

    /// Builds from the strict upper triangle in row-major order
    /// (`(0,1), (0,2), ..., (0,d-1), (1,2), ...`), `d(d-1)/2` entries.
    pub fn from_upper(dim: usize, upper: &[f64]) -> Result<Self> {
        let expected = dim * dim.saturating_sub(1) / 2;
        if upper.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "skew upper triangle",
                expected,
                found: upper.len(),
            });
        }
        if !crate::linalg::all_finite(upper) {
            return Err(Error::NonFinite("skew upper triangle"));
        }
        let mut a = DMatrix::zeros(dim, dim);
        let mut it = upper.iter();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = *it.next().expect("length checked");
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Ok(Self { a })
    }

    /// Accepts `m` if `max |m + m^T| <= 1e-12 * max(1, max |m|)` and stores
    /// `(m - m^T) / 2`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("skew matrix"));
        }
        let sym = m + m.transpose();
        let residual = super::max_abs(&sym);
        if residual > 1e-12 * super::max_abs(m).max(1.0) {
            return Err(Error::NotSkew(residual));
        }
        Ok(Self::antisymmetrize(m))
    }

    /// `(m - m^T) / 2`, for any square `m`.
    pub fn antisymmetrize(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] - m[(j, i)]);
                a[(i, j)] = v;
                a[(j, i)] = -v;
            }
        }
        Self { a }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.a
    }

    /// Strict upper triangle, row-major; inverse of [`SkewMatrix::from_upper`].
    pub fn upper(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
        for i in 0..d {
            for j in (i + 1)..d {
                out.push(self.a[(i, j)]);
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { a: &self.a * s }
    }
}

impl std::ops::Add for &SkewMatrix {
    type Output = SkewMatrix;

    fn add(self, rhs: &SkewMatrix) -> SkewMatrix {
        SkewMatrix { a: &self.a + &rhs.a }
    }
}
