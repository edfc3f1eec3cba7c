use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use jacobi_cli::{run, Cli, CliError, RunConfig, EXIT_ERROR};

/// Caps rayon's global pool when `JACOBI_NUM_THREADS` is set.
fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("JACOBI_NUM_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("JACOBI_NUM_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", CliError::Usage(e.to_string()).to_json());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    let code = configure_threads().and_then(|_| RunConfig::from_cli(cli)).map(|cfg| run(&cfg));
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
