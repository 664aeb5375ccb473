//! Command-line front end: argument parsing, run dispatch, exit codes and
//! report files.

pub mod report;

mod commands;

use clap::Parser;
use sweepout_core::Error;

pub use commands::Cli;

/// Exit codes of [`run_command`].
pub mod exit {
    pub const OK: i32 = 0;
    pub const CERT_FAIL: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const RESOLUTION: i32 = 3;
}

/// Outcome of a command that ran to completion.
pub(crate) enum Outcome {
    Pass,
    Fail(Vec<String>),
}

fn configure_threads() {
    let threads = std::env::var("SWEEPOUT_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).unwrap_or(0);
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
}

fn report_error(e: &Error) -> i32 {
    match e {
        Error::Resolution(_) => {
            eprintln!("RES-ERR: {e}");
            exit::RESOLUTION
        }
        Error::NoCut(_) | Error::Depth(_) => {
            eprintln!("CERT-FAIL: {e}");
            exit::CERT_FAIL
        }
        _ => {
            eprintln!("INPUT-ERR: {e}");
            exit::INPUT
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn run_command(argv: Vec<String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return exit::OK;
            }
            eprintln!("INPUT-ERR: {}", e.to_string().trim_end());
            return exit::INPUT;
        }
    };
    configure_threads();
    match commands::run(cli) {
        Ok(Outcome::Pass) => exit::OK,
        Ok(Outcome::Fail(names)) => {
            eprintln!("CERT-FAIL: {} certificate(s) failed: {}", names.len(), names.join(", "));
            exit::CERT_FAIL
        }
        Err(e) => report_error(&e),
    }
}
