use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use string_pe_cli::bench::{cmd_bench, parse_variant};
use string_pe_cli::encode::cmd_encode;
use string_pe_cli::verify::{run_verify, Suite};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Position-encoding verification, benchmarks and batch encoding.
#[derive(Parser, Debug)]
#[command(name = "string-pe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run property suites and report each residual against its tolerance.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace every upper-bound tolerance with this value.
        #[arg(long)]
        tol: Option<f64>,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Time per-token application and write one CSV row per variant and dimension.
    Bench {
        /// Comma-separated variants: rope, dense, cayley, circulant, outer.
        #[arg(long, value_delimiter = ',', default_value = "circulant,dense")]
        variants: Vec<String>,
        /// Comma-separated even dimensions, each at least 4.
        #[arg(long, value_delimiter = ',', default_value = "64,256,1024")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        tokens: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Encode tokens at positions with a configured encoder.
    Encode {
        /// JSON encoder document.
        #[arg(long)]
        config: PathBuf,
        /// CSV, one position per row.
        #[arg(long)]
        positions: PathBuf,
        /// CSV, one token per row.
        #[arg(long)]
        tokens: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
}

fn usage(err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { suite, seed, tol, json } => {
            if tol.is_some_and(|t| !(t >= 0.0)) {
                return usage(anyhow::anyhow!("--tol must be a non-negative number"));
            }
            match run_verify(suite, seed, tol) {
                Ok(report) => {
                    if json {
                        println!("{}", report.render_json());
                    } else {
                        print!("{}", report.render_text());
                    }
                    if report.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(EXIT_FAILED)
                    }
                }
                Err(e) => {
                    eprintln!("error: verification could not run: {e:#}");
                    ExitCode::from(EXIT_FAILED)
                }
            }
        }
        Command::Bench {
            variants,
            dims,
            tokens,
            seed,
            output,
        } => {
            let variants = match variants.iter().map(|v| parse_variant(v)).collect::<anyhow::Result<Vec<_>>>() {
                Ok(v) => v,
                Err(e) => return usage(e),
            };
            match cmd_bench(&variants, &dims, tokens as usize, seed, &output) {
                Ok(records) => {
                    eprintln!("wrote {} rows to {}", records.len(), output.display());
                    ExitCode::SUCCESS
                }
                Err(e) => usage(e),
            }
        }
        Command::Encode {
            config,
            positions,
            tokens,
            output,
        } => match cmd_encode(&config, &positions, &tokens, &output) {
            Ok(n) => {
                eprintln!("encoded {n} rows into {}", output.display());
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
    }
}
