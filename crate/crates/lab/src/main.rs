use std::process::ExitCode;

fn main() -> ExitCode {
    levelset_lab::cli::run(std::env::args_os())
}
