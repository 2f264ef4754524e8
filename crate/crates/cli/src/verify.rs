//! Property suites with measured residuals.
//!
//! Every check draws its inputs from a stream keyed by the run seed and the
//! check's own salt, so suites are independent of each other and of run
//! order. Reports are deterministic for a fixed seed.

use std::f64::consts::PI;
use std::fmt::Write as _;

use anyhow::Result;
use serde::Serialize;
use string_pe::attention::{
    absorption_equivalence, attention_logits, grad_check, relu_nonabsorption_witness, softmax_rows, witness_case,
    AttentionWeights, ParamSelector, WITNESS_SEED,
};
use string_pe::config::{EncoderConfig, Variant};
use string_pe::coords::{rotate_about_z, wrapped_angle_diff, CanonicalEncoder, CanonicalMap};
use string_pe::linalg::{dot, inf_norm, max_abs, max_abs_diff, norm2, orthogonality_residual, vec_max_abs_diff};
use string_pe::outer::{outer_encode, FourierFeatureMap};
use string_pe::parallel::{try_map_range, Execution};
use string_pe::random::{gaussian_vec, random_orthogonal, random_skew, rng, uniform_vec, SeededRng};
use string_pe::rope::{default_schedule, FrequencySchedule, RopeEncoder};
use string_pe::string::{
    cayley_basis, extract_basis, generator_spectrum, rope_generators, string_matrix, CayleyEncoder, CirculantEncoder,
    GeneratorSet, OrthogonalBasis, FROZEN_CONVENTION,
};
use string_pe::{ApplyPath, DenseEncoder, Encoder, PositionedTokenBatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Rope,
    String,
    Cayley,
    Circulant,
    Outer,
    Coords,
    Attention,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Rope,
        Suite::String,
        Suite::Cayley,
        Suite::Circulant,
        Suite::Outer,
        Suite::Coords,
        Suite::Attention,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Rope => "rope",
            Suite::String => "string",
            Suite::Cayley => "cayley",
            Suite::Circulant => "circulant",
            Suite::Outer => "outer",
            Suite::Coords => "coords",
            Suite::Attention => "attention",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    /// Passes when `value <= tolerance`.
    AtMost,
    /// Passes when `value > tolerance`.
    Exceeds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub bound: Bound,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::Exceeds => ">",
            };
            let _ = writeln!(
                s,
                "{} {}/{} value={:.6e} {op} {:.6e}",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.value,
                c.tolerance
            );
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(s, "{} checks, {} failed (seed {})", self.checks.len(), failed, self.seed);
        s
    }

    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Measured {
    name: &'static str,
    value: f64,
    tolerance: f64,
    bound: Bound,
}

fn at_most(name: &'static str, value: f64, tolerance: f64) -> Measured {
    Measured {
        name,
        value,
        tolerance,
        bound: Bound::AtMost,
    }
}

fn stream(seed: u64, salt: u64) -> SeededRng {
    rng(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

fn seeded_batch(r: &mut SeededRng, n: usize, d: usize, dc: usize, spread: f64) -> Result<PositionedTokenBatch> {
    let tokens = (0..n).map(|_| gaussian_vec(r, d)).collect();
    let positions = (0..n).map(|_| uniform_vec(r, dc, -spread, spread)).collect();
    Ok(PositionedTokenBatch::new(tokens, positions)?)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `max |R(a)^T R(b) - R(b - a)|_inf` over seeded pairs.
fn group_residual(enc: &Encoder, r: &mut SeededRng, pairs: usize) -> Result<f64> {
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let a = uniform_vec(r, enc.coord_dim(), -5.0, 5.0);
        let b = uniform_vec(r, enc.coord_dim(), -5.0, 5.0);
        let lhs = enc.matrix(&a)?.transpose() * enc.matrix(&b)?;
        worst = worst.max(inf_norm(&(lhs - enc.matrix(&sub(&b, &a))?)));
    }
    Ok(worst)
}

fn shift_residual(enc: &Encoder, r: &mut SeededRng) -> Result<f64> {
    let d = enc.dim();
    let w = AttentionWeights::random(r, d, 0.5);
    let b = seeded_batch(r, 12, d, enc.coord_dim(), 4.0)?;
    let delta = uniform_vec(r, enc.coord_dim(), -10.0, 10.0);
    let moved = b.map_positions(|p| p.iter().zip(&delta).map(|(x, y)| x + y).collect())?;
    Ok(max_abs_diff(&attention_logits(&w, enc, &b)?, &attention_logits(&w, enc, &moved)?))
}

fn random_schedule(r: &mut SeededRng, d: usize, dc: usize) -> Result<FrequencySchedule> {
    Ok(FrequencySchedule::from_axes((0..dc).map(|_| uniform_vec(r, d / 2, -1.5, 1.5)).collect())?)
}

const GRID: [(usize, usize); 9] = [(4, 1), (4, 2), (4, 3), (8, 1), (8, 2), (8, 3), (16, 1), (16, 2), (16, 3)];

fn rope_suite(seed: u64) -> Result<Vec<Measured>> {
    let mut r = stream(seed, 1);
    let (mut group, mut equiv, mut norm, mut shift) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (d, dc) in GRID {
        let enc = Encoder::Rope(RopeEncoder::new(random_schedule(&mut r, d, dc)?));
        group = group.max(group_residual(&enc, &mut r, 12)?);
        shift = shift.max(shift_residual(&enc, &mut r)?);
        for _ in 0..6 {
            let Encoder::Rope(rope) = &enc else { unreachable!() };
            let pos = uniform_vec(&mut r, dc, -5.0, 5.0);
            let dense = string_matrix(&rope_generators(rope.schedule()), &pos)?;
            equiv = equiv.max(max_abs_diff(&dense, &rope.matrix(&pos)?));
            let z = gaussian_vec(&mut r, d);
            norm = norm.max((norm2(&rope.apply(&pos, &z)?) - norm2(&z)).abs() / norm2(&z).max(1.0));
        }
    }
    Ok(vec![
        at_most("group_property", group, 1e-9),
        at_most("generator_form_equivalence", equiv, 1e-12),
        at_most("norm_preservation", norm, 1e-12),
        at_most("logit_shift_invariance", shift, 1e-10),
    ])
}

fn string_suite(seed: u64) -> Result<Vec<Measured>> {
    let mut r = stream(seed, 2);
    let (mut group, mut commute) = (0.0_f64, 0.0_f64);
    for (d, dc) in GRID {
        let q = OrthogonalBasis::new(random_orthogonal(&mut r, d))?;
        let dense = DenseEncoder::planted(q, random_schedule(&mut r, d, dc)?)?;
        let gens = dense.generators().generators();
        for i in 0..gens.len() {
            for j in 0..i {
                let (a, b) = (gens[i].matrix(), gens[j].matrix());
                commute = commute.max(max_abs(&(a * b - b * a)));
            }
        }
        group = group.max(group_residual(&Encoder::Dense(dense), &mut r, 12)?);
    }
    let (mut recon, mut freqs) = (0.0_f64, 0.0_f64);
    for _ in 0..5 {
        let (d, dc) = (8, 2);
        let q = random_orthogonal(&mut r, d);
        let planted = random_schedule(&mut r, d, dc)?;
        let gens = GeneratorSet::planted(&q, &planted)?;
        let (p, found) = extract_basis(&gens, r.random_seed())?;
        let rope = RopeEncoder::new(found.clone());
        for _ in 0..4 {
            let pos = uniform_vec(&mut r, dc, -3.0, 3.0);
            let want = string_matrix(&gens, &pos)?;
            let got = p.matrix() * rope.matrix(&pos)? * p.matrix().transpose();
            recon = recon.max(max_abs_diff(&want, &got));
        }
        for k in 0..dc {
            let sorted = |v: &[f64]| {
                let mut v: Vec<f64> = v.iter().map(|x| x.abs()).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            freqs = freqs.max(vec_max_abs_diff(&sorted(planted.axis(k)), &sorted(found.axis(k))));
        }
    }
    Ok(vec![
        at_most("dense_group_property", group, 1e-9),
        at_most("planted_generators_commute", commute, 1e-10),
        at_most("basis_extraction_reconstruction", recon, 1e-8),
        at_most("basis_extraction_frequencies", freqs, 1e-8),
    ])
}

trait SeedDraw {
    fn random_seed(&mut self) -> u64;
}

impl SeedDraw for SeededRng {
    fn random_seed(&mut self) -> u64 {
        rand::Rng::random(self)
    }
}

fn cayley_suite(seed: u64) -> Result<Vec<Measured>> {
    let mut r = stream(seed, 3);
    let (mut ortho, mut det) = (0.0_f64, 0.0_f64);
    for d in [4, 16, 64] {
        for _ in 0..5 {
            let p = cayley_basis(&random_skew(&mut r, d, 0.5))?;
            ortho = ortho.max(orthogonality_residual(p.matrix()));
            det = det.max((p.matrix().determinant() - 1.0).abs());
        }
    }
    let (mut group, mut oracle, mut forms) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (d, dc) in GRID {
        let cay = CayleyEncoder::new(random_skew(&mut r, d, 0.5), random_schedule(&mut r, d, dc)?)?;
        let w = AttentionWeights::random(&mut r, d, 0.5);
        let b = seeded_batch(&mut r, 8, d, dc, 4.0)?;
        let half = RopeEncoder::new(cay.schedule().clone());
        let absorbed = w.absorb(&cay.basis().transpose())?;
        let enc = Encoder::Cayley(cay);
        forms = forms.max(max_abs_diff(
            &attention_logits(&w, &enc, &b)?,
            &attention_logits(&absorbed, &half, &b)?,
        ));
        group = group.max(group_residual(&enc, &mut r, 12)?);
        for _ in 0..3 {
            let pos = uniform_vec(&mut r, dc, -3.0, 3.0);
            let z = gaussian_vec(&mut r, d);
            let fast = enc.apply_path(ApplyPath::Fast, &pos, &z)?;
            oracle = oracle.max(vec_max_abs_diff(&fast, &enc.apply_path(ApplyPath::DenseOracle, &pos, &z)?));
        }
    }
    Ok(vec![
        at_most("basis_orthogonality", ortho, 1e-10),
        at_most("basis_determinant", det, 1e-9),
        at_most("group_property", group, 1e-9),
        at_most("fast_vs_dense_oracle", oracle, 1e-9),
        at_most("application_forms_same_logits", forms, 1e-10),
    ])
}

fn circulant_suite(seed: u64) -> Result<Vec<Measured>> {
    let mut r = stream(seed, 4);
    let mut fft = 0.0_f64;
    for d in [4, 16, 64] {
        for dc in [1, 3] {
            for _ in 0..3 {
                let rows = (0..dc).map(|_| gaussian_vec(&mut r, d)).collect();
                let enc = Encoder::Circulant(CirculantEncoder::new(rows)?);
                let pos = uniform_vec(&mut r, dc, -2.0, 2.0);
                let z = gaussian_vec(&mut r, d);
                let fast = enc.apply_path(ApplyPath::Fast, &pos, &z)?;
                fft = fft.max(vec_max_abs_diff(&fast, &enc.apply_path(ApplyPath::DenseOracle, &pos, &z)?));
            }
        }
    }
    let (mut group, mut shift, mut real) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (d, dc) in GRID {
        let rows: Vec<Vec<f64>> = (0..dc).map(|_| gaussian_vec(&mut r, d)).collect();
        for c in &rows {
            let spec = generator_spectrum(c, FROZEN_CONVENTION);
            let scale = c.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
            real = real.max(spec.iter().map(|s| s.re.abs()).fold(0.0, f64::max) / scale);
        }
        let enc = Encoder::Circulant(CirculantEncoder::new(rows)?);
        group = group.max(group_residual(&enc, &mut r, 12)?);
        shift = shift.max(shift_residual(&enc, &mut r)?);
    }
    Ok(vec![
        at_most("fft_vs_dense_oracle", fft, 1e-8),
        at_most("group_property", group, 1e-9),
        at_most("spectrum_purely_imaginary", real, 1e-10),
        at_most("logit_shift_invariance", shift, 1e-10),
    ])
}

fn outer_suite(seed: u64) -> Result<Vec<Measured>> {
    let mut r = stream(seed, 5);
    let (mut identity, mut unit, mut shift, mut excess) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let map = FourierFeatureMap::gaussian(&mut r, 8, 3)?;
    for _ in 0..100 {
        let (q, k) = (gaussian_vec(&mut r, 8), gaussian_vec(&mut r, 8));
        let (ri, rj) = (uniform_vec(&mut r, 3, -4.0, 4.0), uniform_vec(&mut r, 3, -4.0, 4.0));
        let lhs = dot(outer_encode(&map, &ri, &q)?.entries(), outer_encode(&map, &rj, &k)?.entries());
        let diff = sub(&ri, &rj);
        let kernel = map.frequencies().iter().map(|w| dot(w, &diff).cos()).sum::<f64>() / 8.0;
        identity = identity.max((lhs - dot(&q, &k) * kernel).abs());
        let (fi, fj) = (map.features(&ri)?, map.features(&rj)?);
        unit = unit.max((norm2(&fi) - 1.0).abs());
        let modifier = dot(&fi, &fj);
        excess = excess.max(modifier.abs() - 1.0);
        let delta = uniform_vec(&mut r, 3, -10.0, 10.0);
        let add = |p: &[f64]| -> Vec<f64> { p.iter().zip(&delta).map(|(x, y)| x + y).collect() };
        shift = shift.max((dot(&map.features(&add(&ri))?, &map.features(&add(&rj))?) - modifier).abs());
    }
    Ok(vec![
        at_most("product_of_dot_products", identity, 1e-10),
        at_most("unit_feature_norm", unit, 1e-12),
        at_most("modifier_shift_invariance", shift, 1e-12),
        at_most("modifier_bound_excess", excess.max(0.0), 1e-12),
    ])
}

/// Cayley encoder on `(theta, phi)` whose `phi` frequencies are integers, so
/// its response to the azimuth is `2 pi`-periodic.
pub fn periodic_spherical_encoder(r: &mut SeededRng, d: usize) -> Result<CanonicalEncoder<Encoder>> {
    let theta_axis = uniform_vec(r, d / 2, -2.0, 2.0);
    let phi_axis: Vec<f64> = (0..d / 2).map(|n| (n + 1) as f64 * if n % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let schedule = FrequencySchedule::from_axes(vec![theta_axis, phi_axis])?;
    let enc = Encoder::Cayley(CayleyEncoder::new(random_skew(r, d, 0.5), schedule)?);
    Ok(CanonicalEncoder::new(CanonicalMap::spherical(), enc)?)
}

fn point_off_axis(r: &mut SeededRng) -> [f64; 3] {
    loop {
        let p = gaussian_vec(r, 3);
        if p[0].hypot(p[1]) > 0.1 * norm2(&p) {
            return [p[0], p[1], p[2]];
        }
    }
}

fn coords_suite(seed: u64) -> Result<Vec<Measured>> {
    let mut r = stream(seed, 6);
    let map = CanonicalMap::spherical();
    let mut translation = 0.0_f64;
    for _ in 0..100 {
        let p = point_off_axis(&mut r);
        let dphi = uniform_vec(&mut r, 1, -PI, PI)[0];
        let a = map.to_canonical(&p)?;
        let b = map.to_canonical(&rotate_about_z(&p, dphi))?;
        translation = translation.max((b[0] - a[0]).abs()).max(wrapped_angle_diff(b[1] - a[1], dphi).abs());
    }

    let d = 8;
    let mut invariance = 0.0_f64;
    for _ in 0..5 {
        let enc = periodic_spherical_encoder(&mut r, d)?;
        let w = AttentionWeights::random(&mut r, d, 0.5);
        let tokens = (0..10).map(|_| gaussian_vec(&mut r, d)).collect();
        let points: Vec<[f64; 3]> = (0..10).map(|_| point_off_axis(&mut r)).collect();
        let b = PositionedTokenBatch::new(tokens, points.iter().map(|p| p.to_vec()).collect())?;
        let base = attention_logits(&w, &enc, &b)?;
        for _ in 0..4 {
            let dphi = uniform_vec(&mut r, 1, -PI, PI)[0];
            let rotated = b.map_positions(|p| rotate_about_z(&[p[0], p[1], p[2]], dphi).to_vec())?;
            invariance = invariance.max(max_abs_diff(&base, &attention_logits(&w, &enc, &rotated)?));
        }
    }
    Ok(vec![
        at_most("azimuthal_rotation_translates_phi", translation, 1e-10),
        at_most("rotated_logit_invariance", invariance, 1e-9),
    ])
}

fn attention_suite(seed: u64) -> Result<Vec<Measured>> {
    let mut r = stream(seed, 7);
    let d = 8;
    let (mut absorption, mut disagreements, mut rows) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..20 {
        let w = AttentionWeights::random(&mut r, d, 0.5);
        let p = cayley_basis(&random_skew(&mut r, d, 0.5))?;
        let schedule = default_schedule(d, 100.0, 2)?;
        let b = seeded_batch(&mut r, 16, d, 2, 5.0)?;
        let check = absorption_equivalence(&w, &p, &schedule, &b)?;
        absorption = absorption.max(check.max_abs_diff);
        disagreements += f64::from(u8::from(!check.argmax_agrees));
        let a = softmax_rows(&attention_logits(&w, &RopeEncoder::new(schedule), &b)?);
        rows = rows.max(a.row_iter().map(|row| (row.sum() - 1.0).abs()).fold(0.0, f64::max));
    }
    let witness = {
        let c = witness_case(WITNESS_SEED)?;
        relu_nonabsorption_witness(&c.weights, &c.basis, &c.schedule, &c.batch)?
    };
    let selector = ParamSelector::All;
    let paths = (ApplyPath::Fast, ApplyPath::DenseOracle);
    let circulant = {
        let enc = EncoderConfig::seeded(Variant::Circulant, 16, 1, r.random_seed()).build_encoder()?;
        let w = AttentionWeights::random(&mut r, 16, 0.3);
        grad_check(&enc, paths, &w, &seeded_batch(&mut r, 6, 16, 1, 2.0)?, &selector)?.max_rel_discrepancy
    };
    let cayley = {
        let mut config = EncoderConfig::seeded(Variant::Cayley, 8, 1, r.random_seed());
        config.base_wavelength = 10.0;
        let enc = config.build_encoder()?;
        let w = AttentionWeights::random(&mut r, 8, 0.5);
        grad_check(&enc, paths, &w, &seeded_batch(&mut r, 6, 8, 1, 2.0)?, &selector)?.max_rel_discrepancy
    };
    Ok(vec![
        at_most("absorption_logit_difference", absorption, 1e-9),
        at_most("absorption_argmax_disagreements", disagreements, 0.0),
        at_most("softmax_row_sum", rows, 1e-12),
        Measured {
            name: "relu_nonabsorption_witness",
            value: witness,
            tolerance: 1e-3,
            bound: Bound::Exceeds,
        },
        at_most("grad_check_circulant", circulant, 1e-4),
        at_most("grad_check_cayley", cayley, 1e-4),
    ])
}

fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Measured>> {
    match suite {
        Suite::Rope => rope_suite(seed),
        Suite::String => string_suite(seed),
        Suite::Cayley => cayley_suite(seed),
        Suite::Circulant => circulant_suite(seed),
        Suite::Outer => outer_suite(seed),
        Suite::Coords => coords_suite(seed),
        Suite::Attention => attention_suite(seed),
        Suite::All => unreachable!("expanded by the caller"),
    }
}

/// Runs `suite` (every suite for [`Suite::All`]). `tol` replaces the
/// tolerance of every upper-bound check.
pub fn run_verify(suite: Suite, seed: u64, tol: Option<f64>) -> Result<Report> {
    let suites: Vec<Suite> = match suite {
        Suite::All => Suite::EACH.to_vec(),
        s => vec![s],
    };
    let results = try_map_range(suites.len(), Execution::default(), |i| run_suite(suites[i], seed))?;
    let mut checks = Vec::new();
    for (s, measured) in suites.iter().zip(results) {
        for m in measured {
            let tolerance = match (m.bound, tol) {
                (Bound::AtMost, Some(t)) => t,
                _ => m.tolerance,
            };
            let passed = match m.bound {
                Bound::AtMost => m.value <= tolerance,
                Bound::Exceeds => m.value > tolerance,
            };
            checks.push(Check {
                suite: s.name(),
                name: m.name,
                value: m.value,
                tolerance,
                bound: m.bound,
                passed,
            });
        }
    }
    Ok(Report { seed, checks })
}
