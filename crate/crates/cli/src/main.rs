mod args;
mod commands;
mod error;
mod manifest;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult, EXIT_USAGE};
use manifest::{read_manifest, Recorder};

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Ingest(_) => "ingest",
        Command::Fit(_) => "fit",
        Command::Diagnose(_) => "diagnose",
        Command::Eval(_) => "eval",
        Command::Export(_) => "export",
        Command::Replay(_) => "replay",
    }
}

fn run(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    if cli.threads == 0 {
        return Err(CliError::usage("--threads must be positive"));
    }
    // the global pool serves the diagnostics; the sampler builds its own
    let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    if let Command::Replay(r) = &cli.command {
        let m = read_manifest(&r.manifest)?;
        let mut full = vec![OsString::from("pgembed")];
        full.extend(m.argv.iter().map(OsString::from));
        let replayed = Cli::try_parse_from(full).map_err(|e| CliError::usage(format!("manifest argv does not parse: {e}")))?;
        if matches!(replayed.command, Command::Replay(_)) {
            return Err(CliError::usage("a replay manifest cannot point at another replay"));
        }
        return run(replayed, m.argv);
    }
    let config = serde_json::to_value(&cli.command)?;
    let mut rec = Recorder::new(command_name(&cli.command), &argv, config, cli.threads);
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &mut rec)?,
        Command::Ingest(a) => commands::ingest(a, &mut rec)?,
        Command::Fit(a) => commands::fit(a, cli.threads, &mut rec)?,
        Command::Diagnose(a) => commands::diagnose(a, &mut rec)?,
        Command::Eval(a) => commands::eval(a)?,
        Command::Export(a) => commands::export(a, &mut rec)?,
        Command::Replay(_) => unreachable!(),
    }
    if let Some(path) = commands::manifest_path(&cli.command) {
        rec.write(&path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
