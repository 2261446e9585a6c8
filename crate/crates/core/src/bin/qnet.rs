use std::process::ExitCode;

fn main() -> ExitCode {
    qnet::cli::main_from_args()
}
