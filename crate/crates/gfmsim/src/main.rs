use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(gfmsim::cli::run_cli() as u8)
}
