use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fkm_cli::config::{parse_tol, ConfigInput, Format, PairTag, Suite, WORKERS_ENV};
use fkm_cli::{output, run_suite, unused_overrides, RunError};
use fkm_core::clifford::{build_clifford_system, dump_system, minimal_multiplicity};
use fkm_core::Status;

#[derive(Parser)]
#[command(name = "fkm", version, about = "Numerical verification for OT–FKM isoparametric hypersurfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write its report.
    Verify(VerifyArgs),
    /// Write the matrices of a symmetric Clifford system.
    DumpClifford {
        #[arg(long)]
        m: usize,
        /// Multiplicity; defaults to the smallest admissible one.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct VerifyArgs {
    /// clifford, geometry, isomorphisms, nearly-kahler, star-ricci or all.
    #[arg(long)]
    suite: Option<Suite>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Full-square pair: 1,2 1,6 2,5 or 3,4.
    #[arg(long)]
    pair: Option<PairTag>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fd_step: Option<f64>,
    /// Threshold override `name=value`; repeatable.
    #[arg(long, value_parser = parse_tol)]
    tol: Vec<(String, f64)>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Worker threads; defaults to $FKM_WORKERS or the number of CPUs.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Flat key = value file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Include wall time in the tree report.
    #[arg(long)]
    timing: bool,
}

impl VerifyArgs {
    fn into_input(self) -> Result<ConfigInput, RunError> {
        let file = match &self.config {
            Some(path) => ConfigInput::from_file(path)?,
            None => ConfigInput::default(),
        };
        let flags = ConfigInput {
            suite: self.suite,
            m: self.m,
            k: self.k,
            pair: self.pair,
            theta: self.theta,
            samples: self.samples,
            seed: self.seed,
            fd_step: self.fd_step,
            tol: self.tol,
            output: self.output,
            format: self.format,
            workers: self.workers,
            timing: self.timing.then_some(true),
        };
        Ok(file.overlay(flags))
    }
}

fn verify(args: VerifyArgs) -> Result<i32, RunError> {
    let config = args.into_input()?.resolve()?;
    let outcome = run_suite(&config)?;
    for key in unused_overrides(&outcome.report, &config) {
        eprintln!("fkm: warning: tolerance override `{key}` matched no check");
    }
    output::emit_report(&outcome)?;
    let r = &outcome.report;
    eprintln!(
        "fkm: {}: {} checks, {} passed, {} failed, {} inconclusive",
        config.suite,
        r.checks.len(),
        r.count(Status::Pass),
        r.count(Status::Fail),
        r.count(Status::Inconclusive)
    );
    for rec in r.failures() {
        eprintln!("fkm: FAIL {} = {:e} ({:?})", rec.name, rec.value, rec.bound);
    }
    Ok(outcome.exit_code())
}

fn dump(m: usize, k: Option<usize>, output: Option<PathBuf>) -> Result<i32, RunError> {
    let k = match k {
        Some(k) => k,
        None => minimal_multiplicity(m)?,
    };
    let text = dump_system(&build_clifford_system(m, k)?);
    match output {
        Some(path) => std::fs::write(&path, text).map_err(|source| RunError::Io { path, source })?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => verify(args),
        Command::DumpClifford { m, k, output } => dump(m, k, output),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("fkm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
