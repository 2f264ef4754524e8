use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

const MAX_CONDITION: f64 = 1e12;

/// LU factorization with partial pivoting plus a 1-norm condition estimate.
///
/// The estimate `||M||_1 * est(||M^-1||_1)` uses Hager's iteration, which
/// needs solves with `M^T`; a second factorization of the transpose is kept
/// for that.
pub struct LuSolver {
    dim: usize,
    lu: LU<f64, Dyn, Dyn>,
    condition: f64,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
}

impl LuSolver {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("linear system matrix"));
        }
        let n = rows;
        let lu = m.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::Singular {
                condition: f64::INFINITY,
            });
        }
        let lu_t = m.transpose().lu();
        let inv_norm = hager_inverse_norm(n, &lu, &lu_t);
        let condition = one_norm(m) * inv_norm;
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(Error::Singular { condition });
        }
        Ok(Self { dim: n, lu, condition })
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "right-hand side",
                expected: self.dim,
                found: rhs.len(),
            });
        }
        if !crate::linalg::all_finite(rhs) {
            return Err(Error::NonFinite("right-hand side"));
        }
        let b = DVector::from_column_slice(rhs);
        let x = self.lu.solve(&b).ok_or(Error::Singular {
            condition: self.condition,
        })?;
        Ok(x.iter().copied().collect())
    }
}

fn hager_inverse_norm(n: usize, lu: &LU<f64, Dyn, Dyn>, lu_t: &LU<f64, Dyn, Dyn>) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0;
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else {
            return f64::INFINITY;
        };
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let Some(z) = lu_t.solve(&xi) else {
            return f64::INFINITY;
        };
        let (j, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .fold((0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        if zmax <= z.dot(&x) {
            break;
        }
        x = DVector::zeros(n);
        x[j] = 1.0;
    }
    estimate
}

/// Solves `m x = rhs`; residual `||m x - rhs||_inf <= 1e-9 (1 + ||rhs||_inf)` is
/// checked before returning.
pub fn solve_linear(m: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let solver = LuSolver::new(m)?;
    let x = solver.solve(rhs)?;
    let mx = crate::linalg::matvec(m, &x);
    let residual = crate::linalg::vec_max_abs_diff(&mx, rhs);
    let rhs_norm = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if residual > 1e-9 * (1.0 + rhs_norm) {
        return Err(Error::Singular {
            condition: solver.condition_estimate(),
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vec_max_abs_diff;
    use crate::random::{gaussian_vec, random_skew, rng};
    use proptest::prelude::*;

    #[test]
    fn identity_system() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_linear(&DMatrix::identity(3, 3), &b).unwrap(), b);
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, 1.0]);
        let x = solve_linear(&m, &[1.0, 0.0]).unwrap();
        assert!(vec_max_abs_diff(&x, &[0.5, 0.5]) < 1e-15);
        let mx = crate::linalg::matvec(&m, &x);
        assert!(vec_max_abs_diff(&mx, &[1.0, 0.0]) < 1e-15);
    }

    #[test]
    fn singular_is_reported_with_condition() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(solve_linear(&m, &[1.0, 1.0]), Err(Error::Singular { .. })));
        let near = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        match solve_linear(&near, &[1.0, 1.0]) {
            Err(Error::Singular { condition }) => assert!(condition > 1e12),
            other => panic!("expected ill-conditioning error, got {other:?}"),
        }
    }

    #[test]
    fn condition_estimate_is_close_on_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0, 100.0]));
        let s = LuSolver::new(&m).unwrap();
        assert!((s.condition_estimate() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            solve_linear(&DMatrix::zeros(2, 3), &[0.0, 0.0]),
            Err(Error::NotSquare { .. })
        ));
        assert!(matches!(
            solve_linear(&DMatrix::identity(2, 2), &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn identity_plus_skew_always_solves(seed in any::<u64>(), d in 1usize..24, scale in 0.0f64..10.0) {
            let mut r = rng(seed);
            let s = random_skew(&mut r, d, scale);
            let m = DMatrix::identity(d, d) + s.matrix();
            let z = gaussian_vec(&mut r, d);
            let x = solve_linear(&m, &z).unwrap();
            let res = vec_max_abs_diff(&crate::linalg::matvec(&m, &x), &z);
            prop_assert!(res < 1e-9 * (1.0 + z.iter().fold(0.0f64, |a, v| a.max(v.abs()))));
        }
    }
}
