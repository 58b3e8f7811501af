mod args;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Ctx;

/// Outcome classes, mapped to exit codes 2, 3 and 4.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Analysis(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Analysis(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Analysis(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<swarm_coverage::Error> for Failure {
    fn from(e: swarm_coverage::Error) -> Self {
        use swarm_coverage::Error as E;
        let msg = e.to_string();
        match e {
            E::Parameter(_) | E::Parse { .. } | E::Io(_) => Failure::Input(msg),
            E::Fit(_) | E::Settling(_) | E::Test(_) | E::SamplerEfficiency { .. } | E::QuadratureResolution { .. } => {
                Failure::Analysis(msg)
            }
            E::Evaluation { .. } => Failure::Internal(msg),
        }
    }
}

/// Output prefix used for the default manifest location.
fn prefix(cmd: &Command) -> Option<String> {
    match cmd {
        Command::Extrema(a) => Some(a.out.clone()),
        Command::Pdf(a) => Some(a.out.clone()),
        Command::Sweep(a) => Some(a.out.clone()),
        Command::Simulate(a) => Some(a.out.with_extension("").to_string_lossy().into_owned()),
        Command::Benchmark(a) => a.out.clone(),
        Command::Quadstudy(a) => a.out.clone(),
        Command::Pitfall(a) => a.out.clone(),
        Command::Error(_) | Command::Relerr(_) => None,
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let grid = cli.grid.as_deref().map(commands::parse_pair).transpose()?;
    let threads = cli.threads.unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    let ctx = Ctx { grid, quiet: cli.quiet };

    let manifest = cli
        .manifest
        .clone()
        .or_else(|| prefix(&cli.command).map(|p| PathBuf::from(format!("{p}_manifest.toml"))));
    if let Some(path) = &manifest {
        config::write_manifest(cli, path, rayon::current_num_threads())
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }

    match &cli.command {
        Command::Error(a) => commands::error(&ctx, a),
        Command::Relerr(a) => commands::relerr(&ctx, a),
        Command::Extrema(a) => commands::extrema(&ctx, a),
        Command::Pdf(a) => commands::pdf(&ctx, a),
        Command::Benchmark(a) => commands::benchmark(&ctx, a),
        Command::Simulate(a) => commands::simulate(&ctx, a),
        Command::Quadstudy(a) => commands::quadstudy(&ctx, a),
        Command::Sweep(a) => commands::sweep(&ctx, a),
        Command::Pitfall(a) => commands::pitfall(&ctx, a),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    let outcome = std::panic::catch_unwind(|| run(&cli))
        .unwrap_or_else(|_| Err(Failure::Internal("internal assertion failed".into())));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
