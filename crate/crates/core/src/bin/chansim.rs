use std::process::ExitCode;

fn main() -> ExitCode {
    chansim::cli::main_with_args(std::env::args_os())
}
