use std::process::ExitCode;

fn main() -> ExitCode {
    qcmap::main_with_args(std::env::args_os())
}
