use std::process::ExitCode;

fn main() -> ExitCode {
    lebesgue_cli::run(std::env::args_os())
}
