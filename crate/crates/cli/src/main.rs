use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lsrquad::bench::{self, SweepConfig};
use lsrquad::oracle::DEFAULT_MAX_BITS;
use lsrquad::{Algorithm, GeneratorSpec, Pbf, SelectionVariant};

/// Quadratisation of pseudo-Boolean functions.
///
/// Log verbosity follows RUST_LOG (e.g. RUST_LOG=info).
#[derive(Parser)]
#[command(name = "lsrquad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoKind {
    Lsr,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Sparse,
    Medium,
    Dense,
}

#[derive(clap::Args)]
struct AlgoArgs {
    #[arg(long, value_enum, default_value = "lsr")]
    algo: AlgoKind,
    /// Percentile for LSR pair selection.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    /// Pair selection rule for the baseline.
    #[arg(long, value_enum, default_value = "dense")]
    variant: Variant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl AlgoArgs {
    fn algorithm(&self) -> Result<Algorithm> {
        Ok(match self.algo {
            AlgoKind::Lsr => {
                anyhow::ensure!((0.0..=1.0).contains(&self.q), "--q must lie in [0, 1]");
                Algorithm::Lsr { q: self.q }
            }
            AlgoKind::Baseline => Algorithm::Baseline(match self.variant {
                Variant::Sparse => SelectionVariant::Sparse,
                Variant::Medium => SelectionVariant::Medium,
                Variant::Dense => SelectionVariant::Dense,
            }),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a PBF file to quadratic form.
    Quadratise {
        input: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a random PBF.
    Generate {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        coeff_min: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        coeff_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark sweep from a TOML or JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Reduce a PBF and check the result by exhaustive enumeration.
    /// Exits with status 1 if any check fails.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long, default_value_t = DEFAULT_MAX_BITS)]
        max_bits: usize,
        /// Penalty weight; defaults to 1 + sum of absolute coefficients.
        #[arg(long)]
        c: Option<f64>,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Full-density term counts per (n, degree).
    Scaling {
        #[arg(long)]
        n_max: u64,
        #[arg(long)]
        deg_max: u64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Quadratise { input, algo, out } => {
            let summary = bench::reduce_command(&input, algo.algorithm()?, algo.seed, &out)
                .with_context(|| format!("reducing {}", input.display()))?;
            println!("{summary}");
        }
        Command::Generate {
            n,
            degree,
            density,
            seed,
            coeff_min,
            coeff_max,
            out,
        } => {
            let spec = GeneratorSpec {
                coeff_range: [coeff_min, coeff_max],
                ..GeneratorSpec::new(n, degree, density, seed)
            };
            let f = lsrquad::generate(&spec)?;
            fs::write(&out, f.to_json() + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            println!("{} terms, degree {}", f.len(), f.degree());
        }
        Command::Bench { config, csv } => {
            let config = SweepConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let file = File::create(&csv).with_context(|| format!("creating {}", csv.display()))?;
            let records = lsrquad::run_sweep(&config, BufWriter::new(file))?;
            let timed_out = records.iter().filter(|r| r.timed_out).count();
            println!("{} records ({timed_out} timed out) -> {}", records.len(), csv.display());
        }
        Command::Verify {
            input,
            algo,
            max_bits,
            c,
            report,
        } => {
            let text = fs::read_to_string(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            let f = Pbf::from_json(&text)?;
            let result = bench::verify_instance(&f, algo.algorithm()?, algo.seed, max_bits, c)?;
            let json = result.to_json();
            println!("{json}");
            if let Some(path) = report {
                fs::write(&path, json + "\n")?;
            }
            return Ok(result.ok());
        }
        Command::Scaling { n_max, deg_max, csv } => {
            let rows = lsrquad::terms_scaling_report(n_max, deg_max)?;
            match csv {
                Some(path) => bench::write_scaling_csv(&rows, BufWriter::new(File::create(path)?))?,
                None => bench::write_scaling_csv(&rows, io::stdout().lock())?,
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
