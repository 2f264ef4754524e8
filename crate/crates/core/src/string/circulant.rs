//! Circulant generators with an FFT application path.
//!
//! A circulant `C` built from `c = (c_0, ..., c_{n-1})` has entries
//! `C[i][j] = c[(i - j) mod n]`, so `c` is its first column and each row is the
//! previous one rotated right by one. `L = C - C^T` is circulant and skew, and
//! all circulants commute, so one `c` per axis defines a valid generator set.
//!
//! `L` acts as cyclic convolution with its first column `a`, hence
//! `exp(sum_k r_k L_k) z = idft(exp(sum_k r_k dft(a_k)) * dft(z))` with
//! `dft(a_k)` purely imaginary. The dimension can be split into independent
//! circulant blocks of size `block_size`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::GeneratorSet;
use crate::error::{Error, Result};
use crate::linalg::{all_finite, FftPair, SkewMatrix};

/// Which vector of `L` is transformed to obtain its eigenvalues.
///
/// Under the forward DFT `exp(-2 pi i jk/n)`, transforming the first column
/// diagonalizes `L` with the DFT itself; transforming the first row yields the
/// conjugate (here: negated) spectrum, which encodes `R(-r)`. The unit tests
/// run both against the dense exponential and pin [`FROZEN_CONVENTION`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumConvention {
    FirstColumn,
    FirstRow,
}

pub const FROZEN_CONVENTION: SpectrumConvention = SpectrumConvention::FirstColumn;

fn circulant_matrix(c: &[f64]) -> DMatrix<f64> {
    let n = c.len();
    DMatrix::from_fn(n, n, |i, j| c[(i + n - j) % n])
}

/// Eigenvalues of `L = C - C^T` for one circulant block.
pub fn generator_spectrum(c: &[f64], convention: SpectrumConvention) -> Vec<Complex64> {
    let n = c.len();
    if n == 0 {
        return Vec::new();
    }
    let first_column: Vec<f64> = (0..n).map(|j| c[j] - c[(n - j) % n]).collect();
    let v: Vec<Complex64> = match convention {
        SpectrumConvention::FirstColumn => first_column.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        // First row of L is (c - t) with t the first column of C.
        SpectrumConvention::FirstRow => (0..n).map(|j| Complex64::new(first_column[(n - j) % n], 0.0)).collect(),
    };
    let mut out = v;
    FftPair::new(n).forward(&mut out);
    out
}

fn check_rows(rows: &[Vec<f64>], block_size: usize) -> Result<usize> {
    let Some(first) = rows.first() else {
        return Err(Error::Config("circulant encoder needs at least one axis".into()));
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::Config("circulant rows must be non-empty".into()));
    }
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "circulant row",
                expected: dim,
                found: row.len(),
            });
        }
        if !all_finite(row) {
            return Err(Error::NonFinite("circulant row"));
        }
    }
    if block_size == 0 || dim % block_size != 0 {
        return Err(Error::BlockSize { dim, block: block_size });
    }
    Ok(dim)
}

/// Dense block-circulant generators; block `b` of axis `k` is built from
/// `rows[k][b * block_size..(b + 1) * block_size]`.
pub fn block_circulant_generators(rows: &[Vec<f64>], block_size: usize) -> Result<GeneratorSet> {
    let dim = check_rows(rows, block_size)?;
    let gens = rows
        .iter()
        .map(|row| {
            let mut l = DMatrix::zeros(dim, dim);
            for (b, chunk) in row.chunks(block_size).enumerate() {
                let c = circulant_matrix(chunk);
                let off = b * block_size;
                l.view_mut((off, off), (block_size, block_size))
                    .copy_from(&(&c - c.transpose()));
            }
            SkewMatrix::from_matrix(&l).expect("C - C^T is skew")
        })
        .collect();
    GeneratorSet::from_commuting(gens)
}

/// Single-block circulant generators `L_k = C_k - C_k^T`.
pub fn circulant_generators(rows: &[Vec<f64>]) -> Result<GeneratorSet> {
    let dim = rows.first().map_or(0, Vec::len);
    block_circulant_generators(rows, dim.max(1))
}

#[derive(Debug, Clone)]
pub struct CirculantEncoder {
    dim: usize,
    block_size: usize,
    rows: Vec<Vec<f64>>,
    // Imaginary parts of the generator spectra, per axis, blocks concatenated.
    phases: Vec<Vec<f64>>,
    fft: FftPair,
}

impl PartialEq for CirculantEncoder {
    fn eq(&self, other: &Self) -> bool {
        self.block_size == other.block_size && self.rows == other.rows
    }
}

const SPECTRUM_REAL_TOL: f64 = 1e-10;
const IMAGINARY_RESIDUE_TOL: f64 = 1e-9;

impl CirculantEncoder {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        Self::with_block_size(rows, dim.max(1))
    }

    pub fn with_block_size(rows: Vec<Vec<f64>>, block_size: usize) -> Result<Self> {
        let dim = check_rows(&rows, block_size)?;
        let mut phases = Vec::with_capacity(rows.len());
        for row in &rows {
            let scale = row.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
            let mut axis = Vec::with_capacity(dim);
            for chunk in row.chunks(block_size) {
                for lambda in generator_spectrum(chunk, FROZEN_CONVENTION) {
                    if lambda.re.abs() > SPECTRUM_REAL_TOL * scale * block_size as f64 {
                        return Err(Error::ImaginaryResidue(lambda.re.abs()));
                    }
                    axis.push(lambda.im);
                }
            }
            phases.push(axis);
        }
        Ok(Self {
            dim,
            block_size,
            rows,
            phases,
            fft: FftPair::new(block_size),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coord_dim(&self) -> usize {
        self.rows.len()
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Cached generator spectra (purely imaginary), per axis.
    pub fn spectra(&self) -> Vec<Vec<Complex64>> {
        self.phases
            .iter()
            .map(|axis| axis.iter().map(|&im| Complex64::new(0.0, im)).collect())
            .collect()
    }

    /// Bytes held by the encoder's parameter and spectrum caches.
    pub fn state_bytes(&self) -> usize {
        2 * self.coord_dim() * self.dim * std::mem::size_of::<f64>()
    }

    /// `exp(sum_k r_k L_k) z` in `O(d log b)` time and `O(d)` memory.
    pub fn apply(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.coord_dim() {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: self.coord_dim(),
                found: r.len(),
            });
        }
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "token",
                expected: self.dim,
                found: z.len(),
            });
        }
        let b = self.block_size;
        let mut buf = vec![Complex64::default(); b];
        let mut scratch = vec![Complex64::default(); self.fft.scratch_len()];
        let mut out = vec![0.0; self.dim];
        let mut residue = 0.0_f64;
        for (blk, (zc, oc)) in z.chunks(b).zip(out.chunks_mut(b)).enumerate() {
            for (slot, &x) in buf.iter_mut().zip(zc) {
                *slot = Complex64::new(x, 0.0);
            }
            self.fft.forward_with_scratch(&mut buf, &mut scratch);
            for (m, slot) in buf.iter_mut().enumerate() {
                let idx = blk * b + m;
                let phase: f64 = r.iter().zip(&self.phases).map(|(rk, ph)| rk * ph[idx]).sum();
                let (s, c) = phase.sin_cos();
                *slot *= Complex64::new(c, s);
            }
            self.fft.inverse_with_scratch(&mut buf, &mut scratch);
            for (o, v) in oc.iter_mut().zip(&buf) {
                *o = v.re;
                residue = residue.max(v.im.abs());
            }
        }
        let zmax = z.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
        if residue > IMAGINARY_RESIDUE_TOL * zmax {
            return Err(Error::ImaginaryResidue(residue));
        }
        Ok(out)
    }

    /// Dense `R(r)` assembled column by column from the FFT path.
    pub fn matrix(&self, r: &[f64]) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut e = vec![0.0; self.dim];
        for j in 0..self.dim {
            e[j] = 1.0;
            let col = self.apply(r, &e)?;
            m.set_column(j, &nalgebra::DVector::from_vec(col));
            e[j] = 0.0;
        }
        Ok(m)
    }

    pub fn generators(&self) -> GeneratorSet {
        block_circulant_generators(&self.rows, self.block_size).expect("rows validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{matvec, max_abs, max_abs_diff, orthogonality_residual, vec_max_abs_diff};
    use crate::random::{gaussian_vec, rng, uniform_vec};
    use crate::string::string_matrix;

    fn random_rows(seed: u64, d: usize, dc: usize) -> Vec<Vec<f64>> {
        let mut r = rng(seed);
        (0..dc).map(|_| gaussian_vec(&mut r, d)).collect()
    }

    /// Fast path with an arbitrary convention, for the convention comparison.
    fn apply_with_convention(rows: &[Vec<f64>], r: &[f64], z: &[f64], conv: SpectrumConvention) -> Vec<f64> {
        let n = z.len();
        let spectra: Vec<Vec<Complex64>> = rows.iter().map(|c| generator_spectrum(c, conv)).collect();
        let fft = FftPair::new(n);
        let mut buf: Vec<Complex64> = z.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft.forward(&mut buf);
        for (m, slot) in buf.iter_mut().enumerate() {
            let exponent: Complex64 = spectra.iter().zip(r).map(|(s, rk)| s[m] * rk).sum();
            *slot *= exponent.exp();
        }
        fft.inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    #[test]
    fn frozen_convention_matches_dense_oracle_d4() {
        let mut col_worst = 0.0_f64;
        let mut row_best = f64::INFINITY;
        for seed in 0..8 {
            let rows = random_rows(seed, 4, 2);
            let mut r = rng(seed + 100);
            let pos = uniform_vec(&mut r, 2, 0.5, 2.0);
            let z = gaussian_vec(&mut r, 4);
            let dense = matvec(&string_matrix(&circulant_generators(&rows).unwrap(), &pos).unwrap(), &z);
            let col = apply_with_convention(&rows, &pos, &z, SpectrumConvention::FirstColumn);
            let row = apply_with_convention(&rows, &pos, &z, SpectrumConvention::FirstRow);
            col_worst = col_worst.max(vec_max_abs_diff(&col, &dense));
            row_best = row_best.min(vec_max_abs_diff(&row, &dense));
        }
        assert!(col_worst < 1e-10, "first-column convention off by {col_worst:e}");
        assert!(row_best > 1e-3, "first-row convention unexpectedly agrees ({row_best:e})");
        assert_eq!(FROZEN_CONVENTION, SpectrumConvention::FirstColumn);
    }

    #[test]
    fn two_dimensional_generators_vanish() {
        let g = circulant_generators(&[vec![0.3, -1.7]]).unwrap();
        assert_eq!(max_abs(g.generators()[0].matrix()), 0.0);
        let enc = CirculantEncoder::new(vec![vec![0.3, -1.7]]).unwrap();
        assert_eq!(enc.apply(&[5.0], &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn cyclic_shift_d3() {
        let g = circulant_generators(&[vec![0.0, 1.0, 0.0]]).unwrap();
        let l = g.generators()[0].matrix();
        let expect = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0]);
        assert_eq!(l, &expect);
        for r in [0.3, 1.0, -2.5] {
            let e = string_matrix(&g, &[r]).unwrap();
            assert!(orthogonality_residual(&e) < 1e-12);
        }
    }

    #[test]
    fn origin_and_zero_rows_are_identity() {
        let enc = CirculantEncoder::new(random_rows(1, 8, 2)).unwrap();
        let z = gaussian_vec(&mut rng(2), 8);
        assert!(vec_max_abs_diff(&enc.apply(&[0.0, 0.0], &z).unwrap(), &z) < 1e-15);
        let zero = CirculantEncoder::new(vec![vec![0.0; 8]; 2]).unwrap();
        assert!(vec_max_abs_diff(&zero.apply(&[3.0, -2.0], &z).unwrap(), &z) < 1e-15);
    }

    #[test]
    fn spectra_are_imaginary_and_generators_commute() {
        let rows = random_rows(3, 12, 3);
        for row in &rows {
            assert!(generator_spectrum(row, FROZEN_CONVENTION).iter().all(|l| l.re.abs() < 1e-10));
        }
        let g = circulant_generators(&rows).unwrap();
        assert!(GeneratorSet::new(g.generators().to_vec()).is_ok());
    }

    #[test]
    fn fast_path_matches_dense_d16_dc3() {
        let rows = random_rows(4, 16, 3);
        let enc = CirculantEncoder::new(rows.clone()).unwrap();
        let gens = circulant_generators(&rows).unwrap();
        let mut r = rng(5);
        for _ in 0..5 {
            let pos = uniform_vec(&mut r, 3, -1.0, 1.0);
            let z = gaussian_vec(&mut r, 16);
            let dense = matvec(&string_matrix(&gens, &pos).unwrap(), &z);
            assert!(vec_max_abs_diff(&enc.apply(&pos, &z).unwrap(), &dense) < 1e-8);
        }
    }

    #[test]
    fn block_circulant_matches_dense_and_materializes() {
        let rows = random_rows(6, 12, 2);
        let enc = CirculantEncoder::with_block_size(rows.clone(), 4).unwrap();
        let gens = block_circulant_generators(&rows, 4).unwrap();
        // Off-block entries are zero.
        assert_eq!(gens.generators()[0].matrix()[(0, 5)], 0.0);
        let pos = [0.7, -0.4];
        let dense = string_matrix(&gens, &pos).unwrap();
        assert!(max_abs_diff(&dense, &enc.matrix(&pos).unwrap()) < 1e-10);
        assert!(matches!(
            CirculantEncoder::with_block_size(rows, 5),
            Err(Error::BlockSize { dim: 12, block: 5 })
        ));
    }

    #[test]
    fn dimension_checks() {
        let enc = CirculantEncoder::new(random_rows(1, 4, 1)).unwrap();
        assert!(enc.apply(&[0.0, 1.0], &[0.0; 4]).is_err());
        assert!(enc.apply(&[0.0], &[0.0; 5]).is_err());
        assert!(CirculantEncoder::new(vec![vec![1.0; 4], vec![1.0; 3]]).is_err());
    }
}
