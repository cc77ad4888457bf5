mod commands;
mod config;
mod error;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ModelConfig, Overrides};
use crate::error::CliError;

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat `key = value` model file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    mass: Option<f64>,
    /// Use Q(f) = f^{1+1/k}.
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Use Φ(ρ) = ρ^{1+1/n}.
    #[arg(long, global = true)]
    n: Option<f64>,
    #[arg(long, global = true)]
    grid_nodes: Option<usize>,
    /// Euler–Lagrange residual target of the minimizer.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            mass: self.mass,
            k: self.k,
            n: self.n,
            grid_nodes: self.grid_nodes,
            tol: self.tol,
        }
    }

    fn model(&self) -> Result<ModelConfig, CliError> {
        ModelConfig::resolve(self.config.as_deref(), &self.overrides())
    }

    fn has_model(&self) -> bool {
        self.config.is_some() || self.k.is_some() || self.n.is_some()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write Q*, Φ*, Φ and g tables with a JSON summary.
    Reduce,
    /// Solve the Emden–Fowler problem for the configured mass.
    Solve,
    /// Minimize the reduced functional by the damped fixed-point iteration.
    Minimize,
    /// Lift a solved state (or a profile CSV) to phase space.
    Lift {
        /// Profile with columns r,rho,U,w, as written by solve or minimize.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Symmetric decreasing rearrangement of a density CSV (r,rho).
    Rearrange {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the verification suite and write a pass/fail table.
    Verify,
    /// Solve a grid of models and masses in parallel.
    Sweep {
        /// Masses to solve for; defaults to the configured mass.
        #[arg(long, value_delimiter = ',')]
        masses: Vec<f64>,
        /// Φ polytrope indices; replaces the configured model.
        #[arg(long, value_delimiter = ',', conflicts_with = "k_values")]
        n_values: Vec<f64>,
        /// Q polytrope indices; replaces the configured model.
        #[arg(long, value_delimiter = ',')]
        k_values: Vec<f64>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
}

/// Reduced energy-Casimir functionals, their steady states and phase-space lifts.
#[derive(Parser)]
#[command(name = "casimir", version)]
struct Invocation {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn run(inv: Invocation) -> Result<(), CliError> {
    let c = &inv.common;
    let out = commands::out_dir(c.out.clone());
    match inv.command {
        Command::Reduce => commands::reduce(&c.model()?, &out),
        Command::Solve => commands::solve(&c.model()?, &out),
        Command::Minimize => commands::minimize(&c.model()?, &out),
        Command::Lift { input } => commands::lift_cmd(&c.model()?, &out, input.as_deref()),
        Command::Rearrange { input } => {
            let model = if c.has_model() { Some(c.model()?) } else { None };
            commands::rearrange(&input, model.as_ref(), &out)
        }
        Command::Verify => {
            let report = verify::run_suite();
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::Config(format!("cannot create {}: {e}", out.display())))?;
            casimir_reduce::io::write_json(&out.join("verify.json"), &report)?;
            for check in &report.checks {
                let tag = if check.passed { "PASS" } else { "FAIL" };
                println!(
                    "{tag} {}: {:.3e} (tol {:.0e}) {}",
                    check.name, check.measured, check.tolerance, check.detail
                );
            }
            if report.failed > 0 {
                return Err(CliError::Verification(format!(
                    "{} of {} checks failed",
                    report.failed,
                    report.checks.len()
                )));
            }
            Ok(())
        }
        Command::Sweep {
            masses,
            n_values,
            k_values,
            threads,
        } => {
            let base_overrides = Overrides {
                k: None,
                n: None,
                ..c.overrides()
            };
            let models: Vec<ModelConfig> = if !n_values.is_empty() || !k_values.is_empty() {
                let specs = n_values
                    .iter()
                    .map(|&n| Overrides {
                        n: Some(n),
                        ..base_overrides.clone()
                    })
                    .chain(k_values.iter().map(|&k| Overrides {
                        k: Some(k),
                        ..base_overrides.clone()
                    }));
                specs
                    .map(|o| ModelConfig::resolve(c.config.as_deref(), &o))
                    .collect::<Result<_, _>>()?
            } else {
                vec![c.model()?]
            };
            let masses = if masses.is_empty() {
                vec![models[0].mass]
            } else {
                masses
            };
            let threads = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            commands::sweep(&models, &masses, threads, &out)
        }
    }
}

fn main() -> ExitCode {
    let inv = Invocation::parse();
    match run(inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
