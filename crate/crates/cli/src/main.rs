//! `qsov` batch front end.
//!
//! Exit codes: 0 success, 1 invariant failure or numerical breakdown, 2 configuration error.

mod commands;
mod config;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig, TwistSpec};

#[derive(Parser, Debug)]
#[command(name = "qsov", version, about = "Spectrum, scalar products and elementary blocks of the twisted XXX chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Chain length.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Comma-separated tuples over {1,2}, e.g. `1122,1212`.
    #[arg(long, global = true, value_delimiter = ',')]
    eps: Option<Vec<String>>,
    /// Block length; selects all tuples of that length when `--eps` is absent.
    #[arg(long, global = true)]
    m: Option<usize>,
    /// Comma-separated chain lengths.
    #[arg(long, global = true, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// identity, sigma-x or random.
    #[arg(long, global = true)]
    twist: Option<String>,
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Eigenvalues, Baxter roots and residuals for every eigenstate.
    Spectrum,
    /// Invariant suite; exit status 1 on any failure.
    Verify,
    /// Determinant versus direct SoV scalar products.
    ScalarProduct,
    /// Brute-force and SoV values of finite-size blocks.
    BlockFinite,
    /// Multiple-integral blocks in the thermodynamic limit.
    BlockThermo,
    /// Ground state along a family of twists.
    TwistScan,
    /// Large-size extrapolation of finite blocks.
    Extrapolate,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(n) = cli.n {
        cfg.chain.n = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if let Some(e) = &cli.eps {
        cfg.eps = e.clone();
    }
    if cli.m.is_some() {
        cfg.m = cli.m;
    }
    if let Some(s) = &cli.sizes {
        cfg.sizes = s.clone();
    }
    if let Some(t) = &cli.twist {
        cfg.twist = match t.as_str() {
            "identity" => TwistSpec::Identity {},
            "sigma-x" => TwistSpec::SigmaX {},
            "random" => TwistSpec::RandomUnitaryEigen { seed: None },
            other => return Err(format!("unknown twist {other:?}")),
        };
    }
    if let Some(t) = cli.tolerance {
        cfg.tolerance = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn is_config_error(e: &qsov::Error) -> bool {
    use qsov::Error::*;
    matches!(e, InvalidParams(_) | InvalidTwist(_) | Dimension(..) | SovInapplicable(_) | Input(_))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("config error: {msg}");
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Spectrum => commands::spectrum(&cfg),
        Command::Verify => commands::verify(&cfg),
        Command::ScalarProduct => commands::scalar_product(&cfg),
        Command::BlockFinite => commands::block_finite(&cfg),
        Command::BlockThermo => commands::block_thermo(&cfg),
        Command::TwistScan => commands::twist_scan(&cfg),
        Command::Extrapolate => commands::extrapolate(&cfg),
    };
    let report = match outcome {
        Ok(r) => r,
        Err(e) if is_config_error(&e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &cli.output {
        Some(path) => File::create(path).and_then(|f| {
            let mut w = BufWriter::new(f);
            report.write(&cfg, &mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.write(&cfg, &mut lock)
        }
    };
    if let Err(e) = written {
        eprintln!("error writing report: {e}");
        return ExitCode::from(1);
    }
    for f in &report.failures {
        eprintln!("invariant failed: {} observed {:.3e} threshold {:.3e}", f.name, f.observed, f.threshold);
    }
    if report.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
