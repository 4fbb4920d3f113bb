use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use incoherent_cli::{run, Cli, Status};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            if outcome.written_to.is_none() {
                let mut stdout = std::io::stdout().lock();
                let _ = stdout.write_all(outcome.csv.as_bytes());
            }
            let r = &outcome.report;
            eprintln!(
                "{} rows, {} checks, {} failed, {} invalid",
                r.table.rows.len(),
                r.checks,
                r.failed,
                r.invalid
            );
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::InvalidInput as u8)
        }
    }
}
