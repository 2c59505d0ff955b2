use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = procmap::tools::evaluator_main(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
