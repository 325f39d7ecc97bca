use std::process::ExitCode;

use clap::Parser;
use gkpsim_cli::{commands, Cli, CliError};

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    match std::env::var("GKPSIM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::config("GKPSIM_THREADS", format!("`{v}` is not a positive integer"))),
        Err(_) => match flag {
            Some(0) => Err(CliError::config("threads", "must be at least 1")),
            other => Ok(other),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_count(cli.threads).and_then(|threads| {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .expect("global pool is configured once");
        }
        commands::run(&cli.command.into_config()?)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gkpsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
