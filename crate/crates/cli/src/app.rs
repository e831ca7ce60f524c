//! Command-line front end; `main` only sizes the thread pool and calls [`run_app`].

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::{load, run_scenario, selftest, Overrides};

/// Exit code for success.
pub const EXIT_OK: u8 = 0;
/// Exit code for configuration, model and I/O errors.
pub const EXIT_ERROR: u8 = 1;
/// Exit code for oracle verification or selftest failures.
pub const EXIT_VERIFY: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "jcwigner", version, about = "Jaynes-Cummings field dynamics and Wigner functions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a scenario file or a built-in preset (fig1, fig2, fig3, fig4).
    Run {
        /// Path to a JSON scenario or a preset name.
        source: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Cross-check snapshots against the brute-force oracles.
        #[arg(long)]
        verify: bool,
        /// Override the Wigner grid spacing.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Override the Fock cutoff.
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

/// Parses a thread-count override; `None` leaves the pool at its default size.
pub fn parse_thread_count(value: Option<&str>) -> Result<Option<usize>, String> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{}={v:?} is not a positive thread count", crate::THREADS_ENV)),
        },
    }
}

pub fn run_app<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match cli.command {
        Cmd::Run {
            source,
            out: dir,
            verify,
            grid_step,
            nmax,
        } => {
            let overrides = Overrides { verify, grid_step, nmax };
            let scenario = match load(&source).and_then(|s| overrides.apply(s)) {
                Ok(s) => s,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_ERROR;
                }
            };
            let manifest = match run_scenario(&scenario, &dir) {
                Ok(m) => m,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_ERROR;
                }
            };
            if let Some(v) = &manifest.verification {
                for c in v.checks.iter().filter(|c| !c.passed) {
                    let _ = writeln!(
                        err,
                        "verification failed: {} at gt={} differs by {:e} (tolerance {:e})",
                        c.quantity, c.gt, c.max_abs_diff, c.tolerance
                    );
                }
            }
            if manifest.verification_failed() {
                return EXIT_VERIFY;
            }
            let _ = writeln!(out, "wrote {} files to {}", manifest.files.len() + 1, dir.display());
            EXIT_OK
        }
        Cmd::Selftest => {
            let results = selftest::run_all();
            for r in &results {
                let _ = writeln!(out, "[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if results.iter().all(|r| r.passed) {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }
    }
}
