use std::io::{stderr, stdout};
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = dlpqubo_core::cli::main_with_args(std::env::args_os(), &mut stdout(), &mut stderr());
    ExitCode::from(code as u8)
}
