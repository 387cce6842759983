//! Batch driver: mesh generation, offline basis construction, online
//! queries, reference solves and self-checks.

mod commands;
mod config;
mod error;
mod problem;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "exactflux", version, about = "Locally conservative Darcy flux with reduced-basis correction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the mesh and write it to the output directory.
    Mesh(Common),
    /// Sample parameters, collect snapshots and write the reduced basis.
    Offline(Common),
    /// Solve one query with a stored basis.
    Online {
        #[command(flatten)]
        common: Common,
        /// Basis file; defaults to the one in the output directory.
        #[arg(long)]
        artifact: Option<PathBuf>,
        /// Comma-separated parameter values.
        #[arg(long, allow_hyphen_values = true)]
        query: Option<String>,
        /// Also solve the saddle-point system and report errors against it.
        #[arg(long)]
        verify_fom: bool,
    },
    /// Solve the saddle-point system for one query.
    Fom {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        query: Option<String>,
    },
    /// Run exactness, equivalence and conservation checks; exit 0 iff all pass.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        query: Option<String>,
        #[arg(long, hide = true)]
        inject_sign_fault: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = self.eps {
            cfg.eps = e;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_query(q: Option<String>) -> Result<Option<Vec<f64>>, CliError> {
    q.map(|s| {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| CliError::Config(format!("--query `{t}`: {e}"))))
            .collect()
    })
    .transpose()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mesh(c) => commands::mesh(&c.load()?),
        Command::Offline(c) => commands::offline(&c.load()?),
        Command::Online { common, artifact, query, verify_fom } => {
            commands::online(&common.load()?, artifact, parse_query(query)?, verify_fom)
        }
        Command::Fom { common, query } => commands::fom(&common.load()?, parse_query(query)?),
        Command::Verify { common, query, inject_sign_fault } => {
            commands::verify(&common.load()?, parse_query(query)?, inject_sign_fault)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exactflux: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
