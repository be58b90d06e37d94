mod args;
mod commands;
mod config;
mod error;
mod scenario;

use std::process::ExitCode;

use clap::FromArgMatches;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn run(cli: &Cli, manifest: serde_json::Value) -> CliResult<()> {
    let common = &cli.common;
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up {} threads: {e}", common.threads)))?;
    }
    let out = &common.out_dir;
    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", out.display())))?;
    sicf::io::write_text(
        &out.join(config::MANIFEST_FILE),
        &serde_json::to_string_pretty(&manifest).expect("serializable"),
    )?;
    log::debug!("running {}", cli.command.name());
    let seed = common.seed;
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(a, seed, out),
        Command::Fit(a) => commands::fit::run(a, seed, out),
        Command::Sample(a) => commands::sample::run(a, seed, out),
        Command::Benchmark(a) => commands::benchmark::run(a, seed, out),
        Command::Gibbs(a) => commands::gibbs::run(a, seed, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match config::apply(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let matches = match config::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(&cli, config::manifest(&matches)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
