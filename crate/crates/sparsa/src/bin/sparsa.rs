use std::process::ExitCode;

fn main() -> ExitCode {
    sparsa::cli::run()
}
