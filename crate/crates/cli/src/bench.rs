//! Per-token apply timings.
//!
//! For each `(variant, dim)` the workload is `tokens` seeded tokens and
//! positions. One warm-up apply sets a window size `w` so that a repetition
//! takes about [`TARGET_REP`]; each of the [`REPETITIONS`] repetitions encodes
//! the next `w` tokens of the workload (cyclically) and records elapsed time
//! divided by `w`. The reported value is the median.
//!
//! The dense variant is a planted encoder `P RoPE(r) P^T` with `P` a product
//! of four Householder reflections; every apply materializes the `d x d`
//! matrix and multiplies.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use string_pe::config::{EncoderConfig, Variant};
use string_pe::random::{gaussian_vec, random_householder_orthogonal, rng, uniform_vec};
use string_pe::rope::{default_schedule, DEFAULT_BASE_WAVELENGTH};
use string_pe::string::OrthogonalBasis;
use string_pe::{DenseEncoder, Encoder};

pub const CSV_HEADER: &str = "variant,dim,tokens,ns_per_apply,state_bytes";
pub const REPETITIONS: usize = 20;
pub const TARGET_REP: Duration = Duration::from_millis(20);
const COORD_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub variant: String,
    pub dim: usize,
    pub tokens: usize,
    pub ns_per_apply: f64,
    pub state_bytes: usize,
}

impl BenchRecord {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.1},{}",
            self.variant, self.dim, self.tokens, self.ns_per_apply, self.state_bytes
        )
    }
}

pub fn parse_variant(name: &str) -> Result<Variant> {
    Ok(match name {
        "rope" => Variant::Rope,
        "dense" => Variant::Dense,
        "cayley" => Variant::Cayley,
        "circulant" => Variant::Circulant,
        "outer" => Variant::Outer,
        other => bail!("unknown variant `{other}`"),
    })
}

pub fn bench_encoder(variant: Variant, dim: usize, seed: u64) -> Result<Encoder> {
    if variant == Variant::Dense {
        let p = random_householder_orthogonal(&mut rng(seed), dim, 4);
        let schedule = default_schedule(dim, DEFAULT_BASE_WAVELENGTH, COORD_DIM)?;
        return Ok(Encoder::Dense(DenseEncoder::planted(OrthogonalBasis::new(p)?, schedule)?));
    }
    let mut config = EncoderConfig::seeded(variant, dim, COORD_DIM, seed);
    if variant == Variant::Outer {
        config.num_features = Some(dim / 2);
    }
    Ok(config.build_encoder()?)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median nanoseconds per `enc.apply` over a seeded workload.
pub fn time_encoder(enc: &Encoder, tokens: usize, seed: u64) -> Result<f64> {
    if tokens == 0 {
        bail!("token count must be positive");
    }
    let mut r = rng(seed ^ 0x5eed);
    let z: Vec<Vec<f64>> = (0..tokens).map(|_| gaussian_vec(&mut r, enc.dim())).collect();
    let pos: Vec<Vec<f64>> = (0..tokens).map(|_| uniform_vec(&mut r, enc.coord_dim(), -10.0, 10.0)).collect();

    let start = Instant::now();
    std::hint::black_box(enc.apply(&pos[0], &z[0])?);
    let warm = start.elapsed().as_secs_f64().max(1e-9);
    let window = ((TARGET_REP.as_secs_f64() / warm).ceil() as usize).clamp(1, tokens);

    let mut samples = Vec::with_capacity(REPETITIONS);
    let mut next = 0;
    for _ in 0..REPETITIONS {
        let start = Instant::now();
        for _ in 0..window {
            std::hint::black_box(enc.apply(&pos[next], &z[next])?);
            next = (next + 1) % tokens;
        }
        samples.push(start.elapsed().as_nanos() as f64 / window as f64);
    }
    Ok(median(samples))
}

pub fn run_bench(variants: &[Variant], dims: &[usize], tokens: usize, seed: u64) -> Result<Vec<BenchRecord>> {
    if tokens == 0 {
        bail!("token count must be positive");
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 4 || d % 2 != 0) {
        bail!("dimension {d} must be even and at least 4");
    }
    let mut out = Vec::new();
    for &variant in variants {
        for &dim in dims {
            let enc = bench_encoder(variant, dim, seed)?;
            out.push(BenchRecord {
                variant: enc.variant_name().to_string(),
                dim,
                tokens,
                ns_per_apply: time_encoder(&enc, tokens, seed)?,
                state_bytes: enc.state_bytes(),
            });
        }
    }
    Ok(out)
}

pub fn write_csv(records: &[BenchRecord], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()
}

pub fn cmd_bench(variants: &[Variant], dims: &[usize], tokens: usize, seed: u64, output: &Path) -> Result<Vec<BenchRecord>> {
    let records = run_bench(variants, dims, tokens, seed)?;
    let file = std::fs::File::create(output).with_context(|| format!("cannot write {}", output.display()))?;
    write_csv(&records, std::io::BufWriter::new(file)).with_context(|| format!("cannot write {}", output.display()))?;
    Ok(records)
}
