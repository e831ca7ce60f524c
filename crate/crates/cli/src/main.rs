use std::process::ExitCode;

use jcwigner_cli::app::{parse_thread_count, run_app, EXIT_ERROR};
use jcwigner_cli::THREADS_ENV;

fn main() -> ExitCode {
    let threads = std::env::var(THREADS_ENV).ok();
    match parse_thread_count(threads.as_deref()) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: cannot size the thread pool: {e}");
                return ExitCode::from(EXIT_ERROR);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    let code = run_app(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code)
}
