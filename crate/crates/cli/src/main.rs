use std::process::ExitCode;

use clap::Parser;
use dirac_numerov::parallel::init_thread_pool;
use dirac_numerov_cli::args::Cli;
use dirac_numerov_cli::commands::{resolve_threads, run};
use dirac_numerov_cli::config::ConfigFile;
use dirac_numerov_cli::error::CliResult;

fn execute(cli: &Cli) -> CliResult<u8> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let env = std::env::var("DIRAC_NUMEROV_THREADS").ok();
    if let Some(n) = resolve_threads(cli.threads, &file, env.as_deref())? {
        init_thread_pool(n);
    }
    run(&cli.command, &file)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match std::panic::catch_unwind(|| execute(&cli)) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => 2,
    };
    ExitCode::from(code)
}
