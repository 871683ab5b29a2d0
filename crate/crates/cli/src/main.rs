use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    cthge_cli::main_with(cthge_cli::Cli::parse())
}
