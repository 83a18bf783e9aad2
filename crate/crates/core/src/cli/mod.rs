//! Command-line front end: `validate`, `solve`, `continue` and `probe`.

pub mod commands;
pub mod config;
pub mod output;
pub mod validate;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use config::RunConfig;
use output::{write_json, Header};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURES: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "transmission", version, about = "Nonlinear transmission problem with a small inclusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Probe seed (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for probes.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Potential-theory, Taylor and inequality checks.
    Validate,
    /// Solve at one epsilon and sample the fields.
    Solve {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Solution family over the epsilon grid.
    Continue,
    /// Contraction and basin probes along the family.
    Probe,
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    cfg.check().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn report(failures: &[String]) -> i32 {
    for f in failures {
        eprintln!("failure: {f}");
    }
    if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURES
    }
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match load(cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    if let Some(k) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.out.clone());
    let seed = cli.seed.unwrap_or(cfg.seed);
    let result = match &cli.command {
        Command::Validate => validate::run_validation(&cfg).and_then(|r| {
            std::fs::create_dir_all(&out)?;
            write_json(&out.join("validate.json"), &Header::new("validate"), &r)?;
            for c in &r.checks {
                println!("{:<40} {:>12.3e} <= {:<10.1e} {}", c.name, c.value, c.tolerance, if c.passed { "ok" } else { "FAIL" });
            }
            Ok(r.failures)
        }),
        Command::Solve { epsilon } => match epsilon.or(cfg.epsilon) {
            Some(eps) => commands::cmd_solve(&cfg, eps, &out).map(|p| {
                println!("epsilon {eps}: zeta {:.12e}, {} Newton steps, pde residual {:.3e}", p.zeta, p.report.iterations, p.pde_residuals.max());
                p.failures
            }),
            None => Err(Error::Config("solve needs --epsilon or `epsilon` in the config".into())),
        },
        Command::Continue => commands::cmd_continue(&cfg, &out).map(|p| {
            println!("{} grid points, limit slope {:?}", p.family.entries.len(), p.limit_slope);
            p.failures
        }),
        Command::Probe => commands::cmd_probe(&cfg, seed, &out).map(|p| {
            println!(
                "{} probes, {} distinct fixed points, L slope {:?}, contraction up to epsilon {}, schedule merges up to {}",
                p.probes, p.distinct_fixed_points, p.lipschitz_slope, p.contraction_threshold, p.schedule.eps_star
            );
            p.failures
        }),
    };
    match result {
        Ok(failures) => report(&failures),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURES
        }
    }
}
