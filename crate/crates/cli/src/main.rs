use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use orlicz_cli::{parse_config, run, CliError, Command};

/// Exit status 0: every verdict held or the solve converged.
/// 2: some property failed with a witness. 1: any error.
#[derive(Parser)]
#[command(name = "orlicz", version, about = "Checks, constants and solvers for generalized Φ-functions")]
struct Args {
    command: CommandArg,
    /// TOML run configuration.
    config: PathBuf,
    /// Directory receiving the JSON and CSV artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CommandArg {
    Check,
    Constants,
    Conjugate,
    Solve,
    Refine,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Command {
        match c {
            CommandArg::Check => Command::Check,
            CommandArg::Constants => Command::Constants,
            CommandArg::Conjugate => Command::Conjugate,
            CommandArg::Solve => Command::Solve,
            CommandArg::Refine => Command::Refine,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("ORLICZ_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(vec![format!("ORLICZ_THREADS must be a positive integer, got {raw:?}")]))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(vec![e.to_string()]))
}

fn execute(args: Args) -> Result<u8, CliError> {
    configure_threads()?;
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let mut config = parse_config(&text)?;
    config.command = Some(args.command.into());
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(tol) = args.tol {
        config.options.tol = Some(tol);
    }
    let outcome = run(&config, &args.out)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for path in &outcome.artifacts {
        println!("wrote {}", path.display());
    }
    Ok(outcome.status.exit_code())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
