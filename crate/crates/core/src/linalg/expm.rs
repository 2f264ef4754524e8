use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Inputs with a larger 1-norm are rejected.
pub const MAX_EXP_NORM: f64 = 1e4;

// Scaled argument norm bound; with it the Taylor tail after 20 terms is below 1e-25.
const SCALED_NORM: f64 = 0.5;
const MAX_TERMS: usize = 40;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 0.5, the
/// series is summed until a term no longer changes the partial sum, and the
/// result is squared `s` times. This is the reference path used to check the
/// fast encoders; it makes no attempt to be quick.
pub fn matrix_exp(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("matrix exponential argument"));
    }
    let n = rows;
    let norm = one_norm(a);
    if norm > MAX_EXP_NORM {
        return Err(Error::NormTooLarge {
            norm,
            bound: MAX_EXP_NORM,
        });
    }

    let mut squarings = 0_u32;
    while norm / 2f64.powi(squarings as i32) > SCALED_NORM {
        squarings += 1;
    }
    let b = a / 2f64.powi(squarings as i32);

    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=MAX_TERMS {
        term = (&term * &b) / k as f64;
        sum += &term;
        if one_norm(&term) <= f64::EPSILON * 1e-2 * one_norm(&sum) {
            break;
        }
    }

    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, max_abs_diff, orthogonality_residual};
    use crate::random::{gaussian_matrix, random_skew, rng};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_maps_to_identity() {
        for d in [1, 2, 5, 8] {
            let e = matrix_exp(&DMatrix::zeros(d, d)).unwrap();
            assert_eq!(e, DMatrix::identity(d, d));
        }
    }

    #[test]
    fn quarter_turn_closed_form() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, FRAC_PI_2, -FRAC_PI_2, 0.0]);
        let e = matrix_exp(&a).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(max_abs_diff(&e, &expected) < 1e-10);
    }

    #[test]
    fn two_by_two_block_formula() {
        // exp([[0, t], [-t, 0]]) = [[cos t, sin t], [-sin t, cos t]]
        for t in [0.1, 1.0, 3.0, 17.5, -42.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
            let e = matrix_exp(&a).unwrap();
            let expected =
                DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
            assert!(max_abs_diff(&e, &expected) < 1e-12, "t={t}");
        }
    }

    #[test]
    fn inverse_property_random_skew() {
        let mut r = rng(11);
        let a = random_skew(&mut r, 8, 1.0).into_matrix();
        let prod = matrix_exp(&a).unwrap() * matrix_exp(&(-&a)).unwrap();
        assert!(max_abs_diff(&prod, &DMatrix::identity(8, 8)) < 1e-10);
    }

    #[test]
    fn agrees_with_pade_on_general_matrices() {
        // nalgebra's exp is a Padé approximant, an independent route.
        let mut r = rng(3);
        for scale in [0.01, 1.0, 5.0, 20.0] {
            let a = gaussian_matrix(&mut r, 6, 6) * scale;
            let ours = matrix_exp(&a).unwrap();
            let pade = a.clone().exp();
            let rel = max_abs_diff(&ours, &pade) / max_abs(&pade);
            assert!(rel < 1e-10, "scale {scale}: rel {rel:e}");
        }
    }

    #[test]
    fn norm_one_hundred_rotation_is_accurate() {
        // Block rotation with angle 100: closed form available.
        let t = 100.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
        let e = matrix_exp(&a).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!(max_abs_diff(&e, &expected) < 1e-10);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            matrix_exp(&DMatrix::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::INFINITY;
        assert!(matches!(matrix_exp(&m), Err(Error::NonFinite(_))));
        let big = DMatrix::from_element(2, 2, 1e5);
        assert!(matches!(matrix_exp(&big), Err(Error::NormTooLarge { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn skew_exponential_is_special_orthogonal(seed in any::<u64>(), half in 1usize..6, scale in 0.01f64..4.0) {
            let d = 2 * half;
            let mut r = rng(seed);
            let a = random_skew(&mut r, d, scale).into_matrix();
            let e = matrix_exp(&a).unwrap();
            prop_assert!(orthogonality_residual(&e) < 1e-9);
            prop_assert!((e.determinant() - 1.0).abs() < 1e-9);
        }
    }
}
