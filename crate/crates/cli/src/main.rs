use std::process::ExitCode;

use clap::Parser;
use cornerwalk_cli::{parse_config, run, Cli};

fn main() -> ExitCode {
    let outcome = parse_config(Cli::parse()).and_then(|cfg| run(&cfg));
    match outcome {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("{}  {}", f.sha256, manifest.config.output_dir.join(&f.name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
