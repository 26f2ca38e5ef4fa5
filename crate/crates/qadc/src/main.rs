use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qadc::main_with_args(std::env::args_os()))
}
