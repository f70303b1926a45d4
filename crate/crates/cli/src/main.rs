use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magtunnel_cli::commands::{self, Status};
use magtunnel_cli::config::{check_geometry, validate_config, ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "magtunnel", version, about = "Tunneling between two magnetic wells")]
struct Cli {
    /// TOML experiment configuration (defaults to the canonical spec)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run even when L <= (1 + sqrt(3)/2) a
    #[arg(long, global = true)]
    allow_unproven: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radial ground state: mu_h, mu_h1, norm, residual
    SingleWell {
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        /// Write (r, u) to single_well_h<h>.csv
        #[arg(long)]
        dump: bool,
    },
    /// Agmon distances, the action S and its bounds
    Agmon,
    /// Exterior representation constants
    Tail {
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
    },
    /// Hopping coefficient by line, reduced and Laplace routes
    Hopping {
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
    },
    /// Planar eigensolver gap on a refinement ladder
    PlanarGap {
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        /// Node counts along x, coarse to fine
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Eigen-residual tolerance (default: tol_factor x predicted gap)
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Every configured pipeline over the configured h values
    Sweep,
    /// Join hopping.csv and planar_gap.csv in the output directory
    Compare,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    match &cli.config {
        Some(p) => validate_config(p, cli.allow_unproven),
        None => {
            let c = ExperimentConfig::default();
            check_geometry(&c.spec, cli.allow_unproven)?;
            Ok(c)
        }
    }
}

/// Explicit `--h` values (descending), or the configured sweep.
fn h_list(given: &[f64], cfg: &ExperimentConfig) -> Result<Vec<f64>, ConfigError> {
    if given.is_empty() {
        return Ok(cfg.h_values.clone());
    }
    if let Some(bad) = given.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
        return Err(ConfigError::InvariantViolation(format!("--h must be positive, got {bad}")));
    }
    let mut v = given.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    Ok(v)
}

fn run(cli: &Cli) -> Result<Status, ExitCode> {
    let config_error = |e: &dyn std::fmt::Display| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    };
    let cfg = load(cli).map_err(|e| config_error(&e))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(config_error(&"--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error(&e))?;
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.clone());
    std::fs::create_dir_all(&out).map_err(|e| config_error(&format!("cannot create {}: {e}", out.display())))?;
    let hs = |given: &[f64]| h_list(given, &cfg).map_err(|e| config_error(&e));
    let result = match &cli.command {
        Command::SingleWell { h, dump } => commands::single_well(&cfg, &hs(h)?, *dump, &out),
        Command::Agmon => commands::agmon(&cfg, &out),
        Command::Tail { h } => commands::tail(&cfg, &hs(h)?, &out),
        Command::Hopping { h } => commands::hopping(&cfg, &hs(h)?, &out),
        Command::PlanarGap { h, grids, k, tol } => {
            if *k < 3 {
                return Err(config_error(&"--k must be at least 3"));
            }
            if let Some(t) = tol {
                if !(*t > 0.0) {
                    return Err(config_error(&"--tol must be positive"));
                }
            }
            commands::planar_gap(&cfg, &hs(h)?, grids.as_deref(), *k, *tol, &out)
        }
        Command::Sweep => commands::sweep(&cfg, &out),
        Command::Compare => commands::compare(&out),
    };
    result.map_err(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    // usage errors are configuration errors (exit 1); 2 means partial rows
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(2),
        Err(code) => code,
    }
}
