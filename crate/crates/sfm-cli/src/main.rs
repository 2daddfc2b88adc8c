use std::process::ExitCode;

fn main() -> ExitCode {
    sfm_cli::run::main_entry()
}
