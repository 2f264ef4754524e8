//! Single-head softmax attention over encoded tokens.
//!
//! Logits are `q_i . k_j` with `q_i = enc(r_i, W_q x_i)` and
//! `k_j = enc(r_j, W_k x_j)`, without a `1/sqrt(d)` factor. Values are
//! `W_v x_j` and carry no position encoding.

use nalgebra::DMatrix;
use rand::Rng;

use crate::batch::PositionedTokenBatch;
use crate::encoder::{ApplyPath, Encoder, PathEncoder, PositionEncoder};
use crate::error::{Error, Result};
use crate::linalg::{dot, matvec, max_abs, max_abs_diff};
use crate::parallel::{try_map_range, Execution};
use crate::random::gaussian_matrix;
use crate::rope::{FrequencySchedule, RopeEncoder};
use crate::string::OrthogonalBasis;

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    pub w_q: DMatrix<f64>,
    pub w_k: DMatrix<f64>,
    pub w_v: DMatrix<f64>,
}

impl AttentionWeights {
    pub fn new(w_q: DMatrix<f64>, w_k: DMatrix<f64>, w_v: DMatrix<f64>) -> Result<Self> {
        let d = w_q.nrows();
        for m in [&w_q, &w_k, &w_v] {
            if m.nrows() != m.ncols() {
                return Err(Error::NotSquare {
                    rows: m.nrows(),
                    cols: m.ncols(),
                });
            }
            if m.nrows() != d {
                return Err(Error::DimensionMismatch {
                    what: "attention weight",
                    expected: d,
                    found: m.nrows(),
                });
            }
            if m.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("attention weights"));
            }
        }
        Ok(Self { w_q, w_k, w_v })
    }

    pub fn identity(dim: usize) -> Self {
        let i = DMatrix::identity(dim, dim);
        Self {
            w_q: i.clone(),
            w_k: i.clone(),
            w_v: i,
        }
    }

    /// Gaussian entries with standard deviation `scale`.
    pub fn random(rng: &mut impl Rng, dim: usize, scale: f64) -> Self {
        let mut draw = || gaussian_matrix(rng, dim, dim) * scale;
        let (w_q, w_k, w_v) = (draw(), draw(), draw());
        Self { w_q, w_k, w_v }
    }

    pub fn dim(&self) -> usize {
        self.w_q.nrows()
    }

    /// `P^T W_q`, `P^T W_k`; `W_v` unchanged.
    pub fn absorb(&self, basis: &OrthogonalBasis) -> Result<Self> {
        if basis.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "basis",
                expected: self.dim(),
                found: basis.dim(),
            });
        }
        let pt = basis.matrix().transpose();
        Ok(Self {
            w_q: &pt * &self.w_q,
            w_k: &pt * &self.w_k,
            w_v: self.w_v.clone(),
        })
    }
}

fn check_dims<E: PositionEncoder + ?Sized>(weights: &AttentionWeights, enc: &E, batch: &PositionedTokenBatch) -> Result<()> {
    if enc.token_dim() != weights.dim() {
        return Err(Error::DimensionMismatch {
            what: "encoder token dimension",
            expected: weights.dim(),
            found: enc.token_dim(),
        });
    }
    if let Some(d) = batch.token_dim() {
        if d != weights.dim() {
            return Err(Error::DimensionMismatch {
                what: "token",
                expected: weights.dim(),
                found: d,
            });
        }
    }
    if let Some(dc) = batch.coord_dim() {
        if dc != enc.position_dim() {
            return Err(Error::DimensionMismatch {
                what: "position",
                expected: enc.position_dim(),
                found: dc,
            });
        }
    }
    Ok(())
}

/// Encoded queries and keys, one row per token.
fn queries_keys<E: PositionEncoder + ?Sized>(
    weights: &AttentionWeights,
    enc: &E,
    batch: &PositionedTokenBatch,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    check_dims(weights, enc, batch)?;
    let (x, r) = (batch.tokens(), batch.positions());
    let pairs = try_map_range(batch.len(), Execution::default(), |i| {
        let q = enc.encode(&r[i], &matvec(&weights.w_q, &x[i]))?;
        let k = enc.encode(&r[i], &matvec(&weights.w_k, &x[i]))?;
        Ok::<_, Error>((q, k))
    })?;
    Ok(pairs.into_iter().unzip())
}

/// `N x N` logits `q_i . k_j`. An empty batch gives a `0 x 0` matrix.
pub fn attention_logits<E: PositionEncoder + ?Sized>(
    weights: &AttentionWeights,
    enc: &E,
    batch: &PositionedTokenBatch,
) -> Result<DMatrix<f64>> {
    let (q, k) = queries_keys(weights, enc, batch)?;
    Ok(gram(&q, &k, dot))
}

/// `N x N` matrix of `sim(a_i, b_j)`.
fn gram(a: &[Vec<f64>], b: &[Vec<f64>], sim: impl Fn(&[f64], &[f64]) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| sim(&a[i], &b[j]))
}

/// Row-wise softmax, shifted by each row's maximum.
pub fn softmax_rows(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = logits.clone();
    for mut row in out.row_iter_mut() {
        let m = row.max();
        row.apply(|x| *x = (*x - m).exp());
        let s = row.sum();
        row /= s;
    }
    out
}

/// `y_i = sum_j softmax(logits)_ij W_v x_j`.
pub fn attention_forward<E: PositionEncoder + ?Sized>(
    weights: &AttentionWeights,
    enc: &E,
    batch: &PositionedTokenBatch,
) -> Result<Vec<Vec<f64>>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let a = softmax_rows(&attention_logits(weights, enc, batch)?);
    let v: Vec<Vec<f64>> = batch.tokens().iter().map(|x| matvec(&weights.w_v, x)).collect();
    let d = weights.dim();
    Ok((0..batch.len())
        .map(|i| {
            let mut y = vec![0.0; d];
            for (j, vj) in v.iter().enumerate() {
                let w = a[(i, j)];
                for (yk, vk) in y.iter_mut().zip(vj) {
                    *yk += w * vk;
                }
            }
            y
        })
        .collect())
}

/// `R(r) = P RoPE(r) P^T`, applied in `O(d^2)`.
#[derive(Debug, Clone)]
struct BasisRope<'a> {
    basis: &'a OrthogonalBasis,
    rope: RopeEncoder,
}

impl PositionEncoder for BasisRope<'_> {
    fn position_dim(&self) -> usize {
        self.rope.coord_dim()
    }

    fn token_dim(&self) -> usize {
        self.rope.dim()
    }

    fn output_dim(&self) -> usize {
        self.rope.dim()
    }

    fn encode(&self, r: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.basis.apply(&self.rope.apply(r, &self.basis.apply_transpose(z))?))
    }
}

fn basis_rope<'a>(basis: &'a OrthogonalBasis, schedule: &FrequencySchedule) -> Result<BasisRope<'a>> {
    if basis.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch {
            what: "basis",
            expected: schedule.dim(),
            found: basis.dim(),
        });
    }
    Ok(BasisRope {
        basis,
        rope: RopeEncoder::new(schedule.clone()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionCheck {
    pub max_abs_diff: f64,
    /// Every logit row has the same argmax under both parameterizations.
    pub argmax_agrees: bool,
}

fn row_argmax(m: &DMatrix<f64>) -> Vec<usize> {
    m.row_iter().map(|row| row.transpose().argmax().0).collect()
}

fn compare_logits(a: &DMatrix<f64>, b: &DMatrix<f64>) -> AbsorptionCheck {
    AbsorptionCheck {
        max_abs_diff: max_abs_diff(a, b),
        argmax_agrees: row_argmax(a) == row_argmax(b),
    }
}

/// Logits under `R(r) = P RoPE(r) P^T` with weights `W`, against plain RoPE
/// with weights `P^T W`.
pub fn absorption_equivalence(
    weights: &AttentionWeights,
    basis: &OrthogonalBasis,
    schedule: &FrequencySchedule,
    batch: &PositionedTokenBatch,
) -> Result<AbsorptionCheck> {
    let string = attention_logits(weights, &basis_rope(basis, schedule)?, batch)?;
    let rope = attention_logits(&weights.absorb(basis)?, &RopeEncoder::new(schedule.clone()), batch)?;
    Ok(compare_logits(&string, &rope))
}

/// [`absorption_equivalence`] for an encoder's own apply path, with its basis
/// from [`Encoder::string_basis`]. Rejects non-multiplicative encoders.
pub fn absorption_equivalence_for(
    weights: &AttentionWeights,
    enc: &Encoder,
    batch: &PositionedTokenBatch,
    seed: u64,
) -> Result<AbsorptionCheck> {
    if !enc.is_multiplicative() {
        return Err(Error::NotMultiplicative);
    }
    let (basis, schedule) = enc.string_basis(seed)?;
    let string = attention_logits(weights, enc, batch)?;
    let rope = attention_logits(&weights.absorb(&basis)?, &RopeEncoder::new(schedule), batch)?;
    Ok(compare_logits(&string, &rope))
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.max(0.0)).collect()
}

/// Minimum `max |P - I|` for which the witness is meaningful.
pub const WITNESS_MIN_DISTANCE: f64 = 0.1;

/// Linear-attention similarities `relu(q_i) . relu(k_j)` under the two
/// parameterizations of [`absorption_equivalence`]; returns the max-abs
/// difference. Non-zero values show the basis change cannot be absorbed
/// through the ReLU.
pub fn relu_nonabsorption_witness(
    weights: &AttentionWeights,
    basis: &OrthogonalBasis,
    schedule: &FrequencySchedule,
    batch: &PositionedTokenBatch,
) -> Result<f64> {
    let distance = max_abs(&(basis.matrix() - DMatrix::identity(basis.dim(), basis.dim())));
    if distance <= WITNESS_MIN_DISTANCE {
        return Err(Error::DegenerateBasis(distance));
    }
    relu_similarity_gap(weights, basis, schedule, batch)
}

/// The witness value without the distance precondition.
pub fn relu_similarity_gap(
    weights: &AttentionWeights,
    basis: &OrthogonalBasis,
    schedule: &FrequencySchedule,
    batch: &PositionedTokenBatch,
) -> Result<f64> {
    let relu_sims = |w: &AttentionWeights, enc: &dyn PositionEncoder| -> Result<DMatrix<f64>> {
        let (q, k) = queries_keys(w, enc, batch)?;
        let (q, k): (Vec<_>, Vec<_>) = (q.iter().map(|v| relu(v)).collect(), k.iter().map(|v| relu(v)).collect());
        Ok(gram(&q, &k, dot))
    };
    let string = relu_sims(weights, &basis_rope(basis, schedule)?)?;
    let rope = relu_sims(&weights.absorb(basis)?, &RopeEncoder::new(schedule.clone()))?;
    Ok(max_abs_diff(&string, &rope))
}

/// Inputs for [`relu_nonabsorption_witness`].
#[derive(Debug, Clone)]
pub struct WitnessCase {
    pub weights: AttentionWeights,
    pub basis: OrthogonalBasis,
    pub schedule: FrequencySchedule,
    pub batch: PositionedTokenBatch,
}

/// Seeded witness configuration: `d = 8`, `N = 32`, two coordinate axes,
/// Cayley basis from `S` with `N(0, 0.25)` entries, weights with `N(0, 0.25)`
/// entries, standard normal tokens and positions uniform in `[-5, 5]^2`.
pub fn witness_case(seed: u64) -> Result<WitnessCase> {
    const D: usize = 8;
    const N: usize = 32;
    let mut r = crate::random::rng(seed);
    let weights = AttentionWeights::random(&mut r, D, 0.5);
    let basis = crate::string::cayley_basis(&crate::random::random_skew(&mut r, D, 0.5))?;
    let schedule = crate::rope::default_schedule(D, crate::rope::DEFAULT_BASE_WAVELENGTH, 2)?;
    let tokens = (0..N).map(|_| crate::random::gaussian_vec(&mut r, D)).collect();
    let positions = (0..N).map(|_| crate::random::uniform_vec(&mut r, 2, -5.0, 5.0)).collect();
    Ok(WitnessCase {
        weights,
        basis,
        schedule,
        batch: PositionedTokenBatch::new(tokens, positions)?,
    })
}

/// Seed of the frozen witness configuration.
pub const WITNESS_SEED: u64 = 7;

/// Which parameters [`grad_check`] perturbs, in [`Encoder::params`] layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamSelector {
    All,
    Indices(Vec<usize>),
}

impl ParamSelector {
    fn resolve(&self, n: usize) -> Result<Vec<usize>> {
        match self {
            ParamSelector::All => Ok((0..n).collect()),
            ParamSelector::Indices(ix) => {
                if let Some(&bad) = ix.iter().find(|&&i| i >= n) {
                    return Err(Error::DimensionMismatch {
                        what: "parameter index",
                        expected: n,
                        found: bad,
                    });
                }
                Ok(ix.clone())
            }
        }
    }
}

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// `max |g_a - g_b| / max(|g_a|, |g_b|, floor)` over the selected parameters.
    pub max_rel_discrepancy: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub loss: f64,
}

/// `sum_i |attention_forward_i|^2` through `path`.
pub fn attention_loss(
    weights: &AttentionWeights,
    enc: &Encoder,
    path: ApplyPath,
    batch: &PositionedTokenBatch,
) -> Result<f64> {
    let out = attention_forward(weights, &PathEncoder { encoder: enc, path }, batch)?;
    let loss: f64 = out.iter().map(|y| dot(y, y)).sum();
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok(loss)
}

/// Central-difference gradient of [`attention_loss`] with step [`FD_STEP`].
pub fn finite_difference_gradient(
    weights: &AttentionWeights,
    enc: &Encoder,
    path: ApplyPath,
    batch: &PositionedTokenBatch,
    selector: &ParamSelector,
) -> Result<Vec<f64>> {
    let params = enc.params();
    let indices = selector.resolve(params.len())?;
    let loss_at = |i: usize, delta: f64| -> Result<f64> {
        let mut p = params.clone();
        p[i] += delta;
        attention_loss(weights, &enc.with_params(&p)?, path, batch)
    };
    indices
        .into_iter()
        .map(|i| Ok((loss_at(i, FD_STEP)? - loss_at(i, -FD_STEP)?) / (2.0 * FD_STEP)))
        .collect()
}

/// Compares finite-difference parameter gradients taken through two apply
/// paths of the same encoder.
///
/// The relative discrepancy per parameter uses the denominator
/// `max(|g_a|, |g_b|, 1e-6 (1 + loss))`, so parameters with no effect on the
/// loss compare on an absolute scale instead of dividing noise by noise.
pub fn grad_check(
    enc: &Encoder,
    paths: (ApplyPath, ApplyPath),
    weights: &AttentionWeights,
    batch: &PositionedTokenBatch,
    selector: &ParamSelector,
) -> Result<GradCheck> {
    let loss = attention_loss(weights, enc, paths.0, batch)?;
    let first = finite_difference_gradient(weights, enc, paths.0, batch, selector)?;
    let second = finite_difference_gradient(weights, enc, paths.1, batch, selector)?;
    if first.iter().chain(&second).any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss);
    }
    let floor = 1e-6 * (1.0 + loss.abs());
    let max_rel_discrepancy = first
        .iter()
        .zip(&second)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
        .fold(0.0, f64::max);
    Ok(GradCheck {
        max_rel_discrepancy,
        first,
        second,
        loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SkewMatrix;
    use crate::outer::{FourierFeatureMap, OuterEncoder};
    use crate::random::{gaussian_vec, random_skew, rng, uniform_vec};
    use crate::rope::default_schedule;
    use crate::string::{cayley_basis, CayleyEncoder, CirculantEncoder};

    fn batch(seed: u64, n: usize, d: usize, dc: usize) -> PositionedTokenBatch {
        let mut r = rng(seed);
        let tokens = (0..n).map(|_| gaussian_vec(&mut r, d)).collect();
        let positions = (0..n).map(|_| uniform_vec(&mut r, dc, -3.0, 3.0)).collect();
        PositionedTokenBatch::new(tokens, positions).unwrap()
    }

    #[test]
    fn identity_encoder_gives_plain_logits() {
        let b = batch(1, 6, 4, 2);
        let w = AttentionWeights::random(&mut rng(2), 4, 0.5);
        let logits = attention_logits(&w, &Encoder::identity(4, 2).unwrap(), &b).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let q = matvec(&w.w_q, &b.tokens()[i]);
                let k = matvec(&w.w_k, &b.tokens()[j]);
                assert!((logits[(i, j)] - dot(&q, &k)).abs() < 1e-12);
            }
        }
        let empty = attention_logits(&w, &Encoder::identity(4, 2).unwrap(), &PositionedTokenBatch::empty()).unwrap();
        assert_eq!(empty.shape(), (0, 0));
    }

    #[test]
    fn shift_invariance() {
        let d = 8;
        let sched = default_schedule(d, 100.0, 2).unwrap();
        let encs = vec![
            Encoder::Rope(RopeEncoder::new(sched.clone())),
            Encoder::Cayley(CayleyEncoder::new(random_skew(&mut rng(3), d, 0.5), sched).unwrap()),
            Encoder::Circulant(CirculantEncoder::new(vec![gaussian_vec(&mut rng(4), d); 2]).unwrap()),
        ];
        let b = batch(5, 10, d, 2);
        let w = AttentionWeights::random(&mut rng(6), d, 0.5);
        let moved = b.map_positions(|p| vec![p[0] + 1.7, p[1] - 0.4]).unwrap();
        for enc in &encs {
            let diff = max_abs_diff(&attention_logits(&w, enc, &b).unwrap(), &attention_logits(&w, enc, &moved).unwrap());
            assert!(diff < 1e-10, "{}", enc.variant_name());
        }
    }

    #[test]
    fn outer_logits_factor() {
        let map = FourierFeatureMap::gaussian(&mut rng(7), 4, 2).unwrap();
        let enc = Encoder::Outer(OuterEncoder::new(4, map.clone()));
        let b = batch(8, 5, 4, 2);
        let w = AttentionWeights::random(&mut rng(9), 4, 0.5);
        let logits = attention_logits(&w, &enc, &b).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let q = matvec(&w.w_q, &b.tokens()[i]);
                let k = matvec(&w.w_k, &b.tokens()[j]);
                let f = dot(&map.features(&b.positions()[i]).unwrap(), &map.features(&b.positions()[j]).unwrap());
                assert!((logits[(i, j)] - dot(&q, &k) * f).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn forward_is_convex() {
        let (n, d) = (16, 8);
        let b = batch(10, n, d, 1);
        let w = AttentionWeights::random(&mut rng(11), d, 0.5);
        let enc = Encoder::Rope(RopeEncoder::new(default_schedule(d, 10.0, 1).unwrap()));
        let a = softmax_rows(&attention_logits(&w, &enc, &b).unwrap());
        for row in a.row_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        let y = attention_forward(&w, &enc, &b).unwrap();
        let v: Vec<Vec<f64>> = b.tokens().iter().map(|x| matvec(&w.w_v, x)).collect();
        for (i, yi) in y.iter().enumerate() {
            for k in 0..d {
                let want: f64 = (0..n).map(|j| a[(i, j)] * v[j][k]).sum();
                assert!((yi[k] - want).abs() < 1e-12);
                let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(lo, hi), vj| (lo.min(vj[k]), hi.max(vj[k])));
                assert!(yi[k] >= lo - 1e-12 && yi[k] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn forward_edge_cases() {
        let w = AttentionWeights::random(&mut rng(12), 4, 1.0);
        let enc = Encoder::identity(4, 1).unwrap();
        let one = batch(13, 1, 4, 1);
        let y = attention_forward(&w, &enc, &one).unwrap();
        assert!(crate::linalg::vec_max_abs_diff(&y[0], &matvec(&w.w_v, &one.tokens()[0])) < 1e-15);
        let same = PositionedTokenBatch::new(vec![vec![0.3, -1.0, 2.0, 0.5]; 5], vec![vec![0.0]; 5]).unwrap();
        let v = matvec(&w.w_v, &same.tokens()[0]);
        for yi in attention_forward(&w, &enc, &same).unwrap() {
            assert!(crate::linalg::vec_max_abs_diff(&yi, &v) < 1e-12);
        }
        assert_eq!(attention_forward(&w, &enc, &PositionedTokenBatch::empty()), Err(Error::EmptyBatch));
        assert!(attention_forward(&w, &Encoder::identity(6, 1).unwrap(), &one).is_err());
    }

    #[test]
    fn softmax_handles_large_logits() {
        let m = DMatrix::from_row_slice(1, 3, &[1000.0, 1000.0, -1000.0]);
        let s = softmax_rows(&m);
        assert!((s[(0, 0)] - 0.5).abs() < 1e-15 && s[(0, 2)] == 0.0);
    }

    #[test]
    fn absorption_is_exact_algebra() {
        let d = 8;
        let sched = default_schedule(d, 50.0, 2).unwrap();
        let b = batch(14, 16, d, 2);
        let w = AttentionWeights::random(&mut rng(15), d, 0.5);
        let id = absorption_equivalence(&w, &OrthogonalBasis::identity(d), &sched, &b).unwrap();
        assert_eq!(id.max_abs_diff, 0.0);
        let p = cayley_basis(&random_skew(&mut rng(16), d, 0.5)).unwrap();
        let check = absorption_equivalence(&w, &p, &sched, &b).unwrap();
        assert!(check.max_abs_diff < 1e-9 && check.argmax_agrees);

        let enc = Encoder::Cayley(CayleyEncoder::new(random_skew(&mut rng(17), d, 0.5), sched).unwrap());
        let check = absorption_equivalence_for(&w, &enc, &b, 0).unwrap();
        assert!(check.max_abs_diff < 1e-9 && check.argmax_agrees);
        let outer = Encoder::Outer(OuterEncoder::new(d, FourierFeatureMap::new(vec![vec![1.0, 0.0]]).unwrap()));
        assert_eq!(absorption_equivalence_for(&w, &outer, &b, 0), Err(Error::NotMultiplicative));
    }

    #[test]
    fn relu_witness_properties() {
        let d = 8;
        let sched = default_schedule(d, 50.0, 2).unwrap();
        let b = batch(18, 32, d, 2);
        let w = AttentionWeights::random(&mut rng(19), d, 0.5);
        let id = OrthogonalBasis::identity(d);
        assert_eq!(relu_similarity_gap(&w, &id, &sched, &b).unwrap(), 0.0);
        assert!(matches!(relu_nonabsorption_witness(&w, &id, &sched, &b), Err(Error::DegenerateBasis(_))));
        let p = cayley_basis(&random_skew(&mut rng(20), d, 0.5)).unwrap();
        let gap = relu_nonabsorption_witness(&w, &p, &sched, &b).unwrap();
        assert!(gap > 1e-3);
        let doubled = relu_nonabsorption_witness(&w, &p, &sched, &b.scale_tokens(2.0)).unwrap();
        assert!((doubled - 4.0 * gap).abs() < 1e-10 * (1.0 + gap));
    }

    #[test]
    fn frozen_witness_exceeds_threshold() {
        let c = witness_case(WITNESS_SEED).unwrap();
        let gap = relu_nonabsorption_witness(&c.weights, &c.basis, &c.schedule, &c.batch).unwrap();
        assert!(gap > 1e-3, "{gap}");
    }

    #[test]
    fn grad_check_zero_generators() {
        let d = 4;
        let enc = Encoder::Cayley(CayleyEncoder::new(SkewMatrix::zeros(d), FrequencySchedule::zeros(d, 1).unwrap()).unwrap());
        let b = batch(21, 4, d, 1);
        let w = AttentionWeights::random(&mut rng(22), d, 0.5);
        let g = grad_check(&enc, (ApplyPath::Fast, ApplyPath::DenseOracle), &w, &b, &ParamSelector::All).unwrap();
        let diff = g.first.iter().zip(&g.second).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn grad_check_circulant_d2_is_inert() {
        let enc = Encoder::Circulant(CirculantEncoder::new(vec![vec![0.4, -1.3]]).unwrap());
        let b = batch(23, 3, 2, 1);
        let w = AttentionWeights::random(&mut rng(24), 2, 0.5);
        let g = grad_check(&enc, (ApplyPath::Fast, ApplyPath::DenseOracle), &w, &b, &ParamSelector::All).unwrap();
        assert!(g.first.iter().chain(&g.second).all(|x| x.abs() < 1e-8));
        assert_eq!(g.max_rel_discrepancy, 0.0);
    }

    #[test]
    fn grad_check_small_cayley_and_circulant() {
        let b = batch(25, 4, 4, 1);
        let w = AttentionWeights::random(&mut rng(26), 4, 0.5);
        let sched = default_schedule(4, 10.0, 1).unwrap();
        let cay = Encoder::Cayley(CayleyEncoder::new(random_skew(&mut rng(27), 4, 0.5), sched).unwrap());
        let circ = Encoder::Circulant(CirculantEncoder::new(vec![gaussian_vec(&mut rng(28), 4)]).unwrap());
        for enc in [cay, circ] {
            let g = grad_check(&enc, (ApplyPath::Fast, ApplyPath::DenseOracle), &w, &b, &ParamSelector::All).unwrap();
            assert!(g.max_rel_discrepancy < 1e-4, "{} {}", enc.variant_name(), g.max_rel_discrepancy);
        }
        assert!(ParamSelector::Indices(vec![99]).resolve(3).is_err());
    }
}
