use std::process::ExitCode;

fn main() -> ExitCode {
    medspan::cli::run_from_args(std::env::args_os())
}
