//! `unclab`: runs the uncertainty-relation suites and writes JSON/CSV reports.
//!
//! Exit codes: 0 all pass, 1 config or parse error, 2 input error,
//! 3 an uncertainty relation was violated, 4 an oracle comparison failed.
//! When both 3 and 4 apply, 3 wins.

mod config;
mod output;
mod suites;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use unclab::{wasserstein2, Distribution1D};

use config::{Overrides, SuiteConfig};
use output::OutputDir;
use suites::{Context, SuiteResult};

const EXIT_CONFIG: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RELATION: u8 = 3;
const EXIT_ORACLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "unclab",
    version,
    about = "Numerical checks of position-momentum uncertainty relations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Preparation relation over the configured states.
    Prep(SuiteArgs),
    /// Covariant phase-space measurements: errors, relation, quadrature oracle.
    Covariant(SuiteArgs),
    /// Sequential position-then-momentum measurements with a pointer probe.
    Sequential(SuiteArgs),
    /// Every suite, with a single manifest.
    All(SuiteArgs),
    /// Wasserstein-2 distance between two distribution CSVs.
    W2 { a: PathBuf, b: PathBuf },
    /// Prints the effective configuration as JSON.
    Config(SuiteArgs),
}

#[derive(Args, Clone)]
struct SuiteArgs {
    /// JSON suite configuration; the built-in default suite when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: unclab-out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid size for every suite (power of two).
    #[arg(long)]
    grid_n: Option<usize>,
    /// Grid length for every suite; omitted means the balanced length.
    #[arg(long)]
    grid_length: Option<f64>,
    #[arg(long)]
    hbar: Option<f64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

fn load_config(args: &SuiteArgs) -> Result<SuiteConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => SuiteConfig::load(path).map_err(fail(EXIT_CONFIG))?,
        None => SuiteConfig::default(),
    };
    let overrides = Overrides {
        grid_n: args.grid_n,
        grid_length: args.grid_length,
        hbar: args.hbar,
        out: args.out.clone(),
    };
    cfg.apply(&overrides).map_err(fail(EXIT_CONFIG))?;
    Ok(cfg)
}

/// I/O problems while writing outputs are input errors; anything else raised
/// while building states and devices traces back to the config.
fn classify(error: anyhow::Error) -> Failure {
    let io = error.chain().any(|e| e.is::<std::io::Error>());
    Failure {
        code: if io { EXIT_INPUT } else { EXIT_CONFIG },
        error,
    }
}

type Suite = fn(&mut Context) -> anyhow::Result<SuiteResult>;

fn run_suites(args: &SuiteArgs, which: &[Suite]) -> Result<u8, Failure> {
    let cfg = load_config(args)?;
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| Failure {
                code: EXIT_CONFIG,
                error: anyhow!("--jobs: {e}"),
            })?;
    }
    let hash = cfg.hash();
    let dir = cfg.out_dir();
    let mut out = OutputDir::create(&dir).map_err(fail(EXIT_INPUT))?;
    let mut results = Vec::new();
    for suite in which {
        let mut ctx = Context {
            cfg: &cfg,
            hash: hash.clone(),
            out: &mut out,
        };
        results.push(suite(&mut ctx).map_err(classify)?);
    }
    let manifest = out.finish(&hash).map_err(fail(EXIT_INPUT))?;
    println!("wrote {}", manifest.display());

    Ok(if !results.iter().all(SuiteResult::relations_pass) {
        EXIT_RELATION
    } else if !results.iter().all(SuiteResult::oracles_pass) {
        EXIT_ORACLE
    } else {
        0
    })
}

fn read_distribution(path: &Path) -> Result<Distribution1D, Failure> {
    let file = File::open(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        error: anyhow!("cannot open {}: {e}", path.display()),
    })?;
    Distribution1D::read_csv(BufReader::new(file)).map_err(|e| Failure {
        code: EXIT_CONFIG,
        error: anyhow!("{}: {e}", path.display()),
    })
}

/// Six significant digits in plain decimal notation; zero prints `0.000000`.
fn six_significant(v: f64) -> String {
    if v == 0.0 {
        return "0.000000".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-6..15).contains(&magnitude) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn w2(a: &Path, b: &Path) -> Result<u8, Failure> {
    let da = read_distribution(a)?;
    let db = read_distribution(b)?;
    // Unit mismatch and every other failure here are input errors.
    let d = wasserstein2(&da, &db).map_err(|e| Failure {
        code: EXIT_INPUT,
        error: e.into(),
    })?;
    println!("{}", six_significant(d));
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Prep(args) => run_suites(&args, &[suites::prep]),
        Command::Covariant(args) => run_suites(&args, &[suites::covariant]),
        Command::Sequential(args) => run_suites(&args, &[suites::sequential]),
        Command::All(args) => run_suites(
            &args,
            &[suites::prep, suites::covariant, suites::sequential],
        ),
        Command::W2 { a, b } => w2(&a, &b),
        Command::Config(args) => {
            let cfg = load_config(&args)?;
            let text =
                serde_json::to_string_pretty(&cfg).map_err(|e| fail(EXIT_CONFIG)(e.into()))?;
            println!("{text}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
