//! Discrete Fourier transform.
//!
//! Convention: `dft(x)[k] = sum_j x[j] exp(-2 pi i j k / n)` (unnormalized) and
//! `idft(X)[j] = (1/n) sum_k X[k] exp(+2 pi i j k / n)`. Under this convention a
//! circulant matrix with first column `a` acts as `idft(dft(a) * dft(x))`.
//! Power-of-two lengths take a radix-2 path; other lengths are handled by
//! rustfft's mixed-radix and Bluestein plans.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type ComplexVector = Vec<Complex64>;

fn check_finite(v: &[Complex64]) -> Result<()> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("DFT input"))
    }
}

pub fn dft(v: &[Complex64]) -> Result<ComplexVector> {
    check_finite(v)?;
    let mut out = v.to_vec();
    if !out.is_empty() {
        FftPair::new(out.len()).forward(&mut out);
    }
    Ok(out)
}

pub fn idft(v: &[Complex64]) -> Result<ComplexVector> {
    check_finite(v)?;
    let mut out = v.to_vec();
    if !out.is_empty() {
        FftPair::new(out.len()).inverse(&mut out);
    }
    Ok(out)
}

/// Planned forward and inverse transforms for a fixed length.
#[derive(Clone)]
pub struct FftPair {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl fmt::Debug for FftPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            len,
            forward,
            inverse,
            scratch_len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn scratch_len(&self) -> usize {
        self.scratch_len
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        self.forward_with_scratch(buf, &mut scratch);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        self.inverse_with_scratch(buf, &mut scratch);
    }

    pub fn forward_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, scratch);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
        let inv_n = 1.0 / self.len as f64;
        for c in buf.iter_mut() {
            *c *= inv_n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_vec, rng};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// O(n^2) evaluation of the defining sum.
    fn naive_dft(x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let ang = sign * 2.0 * PI * (j * k) as f64 / n as f64;
                        v * Complex64::new(ang.cos(), ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    fn random_complex(seed: u64, n: usize) -> Vec<Complex64> {
        let mut r = rng(seed);
        let re = gaussian_vec(&mut r, n);
        let im = gaussian_vec(&mut r, n);
        re.into_iter()
            .zip(im)
            .map(|(a, b)| Complex64::new(a, b))
            .collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn delta_transforms_to_ones() {
        for n in [1, 2, 7, 16] {
            let mut v = vec![Complex64::default(); n];
            v[0] = Complex64::new(1.0, 0.0);
            let f = dft(&v).unwrap();
            assert!(f.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn round_trip_sixteen() {
        let v = random_complex(5, 16);
        let back = idft(&dft(&v).unwrap()).unwrap();
        let scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(max_diff(&v, &back) / scale < 1e-10);
    }

    #[test]
    fn matches_defining_sum_for_generic_lengths() {
        for n in [1, 3, 5, 6, 12, 16, 31, 64] {
            let v = random_complex(n as u64, n);
            let fast = dft(&v).unwrap();
            let slow = naive_dft(&v, -1.0);
            assert!(max_diff(&fast, &slow) < 1e-9, "n={n}");
            let inv_slow: Vec<_> = naive_dft(&v, 1.0).into_iter().map(|c| c / n as f64).collect();
            assert!(max_diff(&idft(&v).unwrap(), &inv_slow) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn real_even_input_has_real_spectrum() {
        let n = 12;
        let mut r = rng(9);
        let half = gaussian_vec(&mut r, n);
        let v: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(half[j.min(n - j) % n], 0.0))
            .collect();
        for j in 0..n {
            assert_eq!(v[j], v[(n - j) % n]);
        }
        assert!(dft(&v).unwrap().iter().all(|c| c.im.abs() < 1e-10));
    }

    #[test]
    fn rejects_non_finite() {
        let v = vec![Complex64::new(f64::NAN, 0.0)];
        assert!(matches!(dft(&v), Err(Error::NonFinite(_))));
        assert!(matches!(idft(&v), Err(Error::NonFinite(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn linearity(seed in any::<u64>(), n in 1usize..40, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let u = random_complex(seed, n);
            let v = random_complex(seed.wrapping_add(1), n);
            let combo: Vec<_> = u.iter().zip(&v).map(|(a, b)| a * alpha + b * beta).collect();
            let lhs = dft(&combo).unwrap();
            let (fu, fv) = (dft(&u).unwrap(), dft(&v).unwrap());
            let rhs: Vec<_> = fu.iter().zip(&fv).map(|(a, b)| a * alpha + b * beta).collect();
            let scale = rhs.iter().map(|c| c.norm()).fold(1.0, f64::max);
            prop_assert!(max_diff(&lhs, &rhs) / scale < 1e-10);
        }
    }
}
