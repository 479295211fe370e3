use std::process::ExitCode;

fn main() -> ExitCode {
    zerobias::cli::main_entry(std::env::args_os())
}
