//! `cns` — command-line driver for the annular stream-function solver.
//!
//! ```text
//! cns run    --config problem.ini --out results/
//! cns verify --suite identities|convergence|expansion|interpolation
//! cns expand --config study.ini --levels 4 --out results/
//! ```
//!
//! Exit codes: 0 success, 1 configuration/i-o/format problem, 2 the solver
//! tripped its blow-up guard mid-run. `CNS_THREADS=k` caps the worker pool.

use clap::{Parser, Subcommand};
use cns_cli::errors::CliError;
use cns_cli::{config, expand, run, verify};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cns",
    about = "Annular stream-function solver: run, verify, and expansion studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured problem; write energy.csv, residuals.csv, and
    /// field snapshots.
    Run {
        /// Problem description (INI format).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides out_dir from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in verification suite and report measured values.
    Verify {
        #[arg(long, value_enum)]
        suite: verify::Suite,
    },
    /// Nested-domain expansion study; write levels.csv and expansion.csv.
    Expand {
        /// Problem description (INI format); the domain must be [1/(2n), 2n].
        #[arg(long)]
        config: PathBuf,
        /// Number of nested levels (default: from config, else 3).
        #[arg(long)]
        levels: Option<usize>,
        /// Output directory (overrides out_dir from the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() {
    if let Ok(s) = std::env::var("CNS_THREADS") {
        if let Ok(k) = s.trim().parse::<usize>() {
            if k >= 1 {
                // losing the race against an already-built pool is fine
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(k)
                    .build_global();
            }
        }
    }
}

/// `--out` wins; otherwise the config's `out_dir`; one of them is required.
fn resolve_out(flag: Option<PathBuf>, cfg: &config::ConfigFile) -> Result<PathBuf, CliError> {
    flag.or_else(|| cfg.out_dir.clone()).ok_or_else(|| {
        CliError::Invalid(
            "no output directory: pass --out or set out_dir in [output]".to_string(),
        )
    })
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = config::parse_config(&config)?;
            let out_dir = resolve_out(out, &cfg)?;
            run::cmd_run(&cfg, &out_dir)?;
            Ok(true)
        }
        Command::Verify { suite } => verify::cmd_verify(suite),
        Command::Expand {
            config,
            levels,
            out,
        } => {
            let cfg = config::parse_config(&config)?;
            let out_dir = resolve_out(out, &cfg)?;
            let levels = levels.unwrap_or(cfg.levels);
            expand::cmd_expand(&cfg, levels, &out_dir)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("cns: {e}");
            e.exit_code()
        }
    }
}
