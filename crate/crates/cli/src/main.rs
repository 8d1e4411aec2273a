use std::process::ExitCode;

fn main() -> ExitCode {
    bachflow_cli::main_with(std::env::args_os())
}
