use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use gmms_cli::{execute, output_path, Cli, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stderr = std::io::stderr();
    match execute(&cli, &mut stderr) {
        Ok(output) => {
            let bytes = output.bytes;
            let written = match output_path(&cli) {
                Some(path) => std::fs::write(path, &bytes).map_err(|e| (path.display().to_string(), e)),
                None => std::io::stdout().write_all(&bytes).map_err(|e| ("stdout".into(), e)),
            };
            match (written, output.failure) {
                (Ok(()), None) => ExitCode::SUCCESS,
                (Ok(()), Some(e)) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code())
                }
                (Err((target, e)), _) => {
                    eprintln!("error: cannot write {target}: {e}");
                    ExitCode::from(EXIT_INPUT)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
