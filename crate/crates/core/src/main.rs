use std::process::ExitCode;

fn main() -> ExitCode {
    aopt::cli::main()
}
