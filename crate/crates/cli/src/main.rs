use std::process::ExitCode;

use clap::Parser;

mod args;
mod artifacts;
mod commands;
mod source;

/// Caps rayon's worker count from `GRADCF_THREADS`.
fn configure_threads() {
    let Ok(v) = std::env::var("GRADCF_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        _ => eprintln!("warning: ignoring GRADCF_THREADS={v:?}"),
    }
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    configure_threads();
    match commands::dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
