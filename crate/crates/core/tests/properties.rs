use proptest::prelude::*;

use string_pe::attention::{attention_logits, AttentionWeights};
use string_pe::config::{EncoderConfig, Variant};
use string_pe::linalg::{inf_norm, max_abs_diff, norm2, vec_max_abs_diff};
use string_pe::random::{gaussian_vec, rng, uniform_vec};
use string_pe::{encode_batch, Encoder, PositionEncoder, PositionedTokenBatch};

const MULTIPLICATIVE: [Variant; 4] = [Variant::Dense, Variant::Rope, Variant::Cayley, Variant::Circulant];

fn encoder(variant: Variant, d: usize, dc: usize, seed: u64) -> Encoder {
    let mut c = EncoderConfig::seeded(variant, d, dc, seed);
    c.base_wavelength = 20.0;
    c.num_features = (variant == Variant::Outer).then_some(4);
    c.build_encoder().unwrap()
}

fn variant_strategy() -> impl Strategy<Value = Variant> {
    prop::sample::select(MULTIPLICATIVE.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_property(variant in variant_strategy(), half in 1usize..6, dc in 1usize..4, seed in any::<u64>()) {
        let d = 2 * half;
        let enc = encoder(variant, d, dc, seed);
        let mut r = rng(seed);
        let (a, b) = (uniform_vec(&mut r, dc, -4.0, 4.0), uniform_vec(&mut r, dc, -4.0, 4.0));
        let diff: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
        let lhs = enc.matrix(&a).unwrap().transpose() * enc.matrix(&b).unwrap();
        prop_assert!(inf_norm(&(lhs - enc.matrix(&diff).unwrap())) < 1e-9);
        prop_assert!(max_abs_diff(&enc.matrix(&vec![0.0; dc]).unwrap(), &nalgebra::DMatrix::identity(d, d)) < 1e-12);
    }

    #[test]
    fn encode_then_negate_recovers(variant in variant_strategy(), half in 1usize..6, seed in any::<u64>()) {
        let d = 2 * half;
        let enc = encoder(variant, d, 2, seed);
        let mut r = rng(seed ^ 1);
        let (pos, z) = (uniform_vec(&mut r, 2, -6.0, 6.0), gaussian_vec(&mut r, d));
        let neg: Vec<f64> = pos.iter().map(|x| -x).collect();
        let there = enc.apply(&pos, &z).unwrap();
        prop_assert!((norm2(&there) - norm2(&z)).abs() < 1e-10 * (1.0 + norm2(&z)));
        prop_assert!(vec_max_abs_diff(&enc.apply(&neg, &there).unwrap(), &z) < 1e-9);
    }

    #[test]
    fn logits_shift_invariant(variant in prop::sample::select(vec![Variant::Dense, Variant::Rope, Variant::Cayley, Variant::Circulant, Variant::Outer]), seed in any::<u64>()) {
        let (d, dc, n) = (6, 2, 6);
        let enc = encoder(variant, d, dc, seed);
        let mut r = rng(seed ^ 2);
        let w = AttentionWeights::random(&mut r, d, 0.5);
        let tokens = (0..n).map(|_| gaussian_vec(&mut r, d)).collect();
        let positions = (0..n).map(|_| uniform_vec(&mut r, dc, -3.0, 3.0)).collect();
        let batch = PositionedTokenBatch::new(tokens, positions).unwrap();
        let delta = uniform_vec(&mut r, dc, -20.0, 20.0);
        let moved = batch.map_positions(|p| p.iter().zip(&delta).map(|(x, y)| x + y).collect()).unwrap();
        let diff = max_abs_diff(&attention_logits(&w, &enc, &batch).unwrap(), &attention_logits(&w, &enc, &moved).unwrap());
        prop_assert!(diff < 1e-10 * (1.0 + max_abs_diff(&attention_logits(&w, &enc, &batch).unwrap(), &nalgebra::DMatrix::zeros(n, n))));
    }
}

#[test]
fn configured_batch_encoding_round_trips_through_json() {
    let mut r = rng(3);
    let tokens: Vec<Vec<f64>> = (0..20).map(|_| gaussian_vec(&mut r, 8)).collect();
    let positions: Vec<Vec<f64>> = (0..20).map(|_| uniform_vec(&mut r, 2, -2.0, 2.0)).collect();
    let batch = PositionedTokenBatch::new(tokens, positions).unwrap();
    for variant in MULTIPLICATIVE {
        let config = EncoderConfig::seeded(variant, 8, 2, 11);
        let direct = encode_batch(&config.build().unwrap(), &batch).unwrap();
        let reparsed = EncoderConfig::from_json(&config.to_json()).unwrap().build().unwrap();
        assert_eq!(encode_batch(&reparsed, &batch).unwrap(), direct);
        assert_eq!(reparsed.position_dim(), 2);
    }
}
