use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(frontspeed_cli::run(std::env::args_os()))
}
