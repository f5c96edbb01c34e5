use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = mssr_cli::Cli::parse();
    let report = mssr_cli::run(&cli);
    print!("{}", report.stdout);
    eprint!("{}", report.stderr);
    ExitCode::from(report.status as u8)
}
