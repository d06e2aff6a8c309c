use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use heisenberg_adiabatic::cli::{self, Command};
use heisenberg_adiabatic::config::RunConfig;
use heisenberg_adiabatic::Error;

#[derive(Parser)]
#[command(version, about = "Adiabatic-limit spectra of Heisenberg nilmanifolds and Rumin's complex")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the algebraic and discretisation invariant suites.
    Verify(Common),
    /// ε-sweep of the Laplacian spectra with rate classes and Rumin comparisons.
    Sweep(Common),
    /// Rumin fiber dimensions, harmonic dimensions and operator orders.
    Rumin(Common),
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn load(c: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::parse(&std::fs::read_to_string(p)?)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (cmd, common) = match &args.cmd {
        Cmd::Verify(c) => (Command::Verify, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Rumin(c) => (Command::Rumin, c),
    };
    let result = load(common).and_then(|cfg| {
        let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
        cli::run(cmd, &cfg, &out)
    });
    match result {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
