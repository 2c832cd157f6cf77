use std::process::ExitCode;

fn main() -> ExitCode {
    match relaysec_cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("relaysec: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
