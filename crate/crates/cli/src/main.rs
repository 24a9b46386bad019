use std::process::ExitCode;

use clap::Parser;
use fistab_cli::{execute, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(bundle) => {
            for w in &bundle.manifest.warnings {
                eprintln!("warning: {w}");
            }
            for e in &bundle.manifest.errors {
                eprintln!("error: {e}");
            }
            println!(
                "wrote {} files to {}",
                bundle.manifest.files.len() + 1,
                bundle.dir.display()
            );
            if bundle.has_errors() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
