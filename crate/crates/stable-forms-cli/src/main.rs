//! Command-line front end: classification, volumes, duals, metrics,
//! identity suites, and flow integration. JSON reports go to stdout with a
//! top-level `"schema":"1"`; trajectories are CSV with 17-significant-digit
//! floats. Exit 0 on success, 2 on domain errors (non-stable form, singular
//! flow, malformed input).

mod commands;
mod report;

use clap::Parser;

fn main() {
    let cli = commands::Cli::parse();
    match commands::run(&cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
