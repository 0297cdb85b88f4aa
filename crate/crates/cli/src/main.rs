use std::process::ExitCode;

use gld_cli::{configure_threads, emit, execute, parse_args, CliError};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let spec = match parse_args(std::env::args_os()) {
        Ok(spec) => spec,
        Err(CliError::Info(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = configure_threads()
        .and_then(|_| execute(&spec))
        .and_then(|text| Ok(emit(&text)?));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
