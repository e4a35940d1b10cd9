//! `sqlfix` command-line entry point.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 gate failure,
//! 4 remote service unavailable. Failures print one JSON object on stderr:
//! `{"error": {"code": .., "exit_code": .., "message": ..}}`.

mod cli;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{args::Cli, Failure, Kind};

fn report(kind: Kind, message: &str) -> ExitCode {
    let body = serde_json::json!({
        "error": {
            "code": kind.code(),
            "exit_code": kind.exit_code(),
            "message": message,
        }
    });
    eprintln!("{body}");
    ExitCode::from(kind.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(Kind::Usage, e.render().to_string().trim()),
    };
    match cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<Failure>().map_or(Kind::Data, |f| f.kind);
            report(kind, &format!("{e:#}"))
        }
    }
}
