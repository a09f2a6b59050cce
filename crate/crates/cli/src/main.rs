mod args;
mod commands;
mod error;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use error::CliError;

/// Exit status for malformed command lines.
const USAGE_EXIT: u8 = 1;

/// Splices the flags of a `--config FILE` into `argv` right after the
/// subcommand, so anything given explicitly on the command line wins.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut config: Option<PathBuf> = None;
    let mut subcommand: Option<(usize, String)> = None;
    let mut k = 1;
    while k < argv.len() {
        let arg = argv[k].to_string_lossy();
        if arg == "--config" {
            config = argv.get(k + 1).map(PathBuf::from);
            k += 2;
            continue;
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else if subcommand.is_none() && !arg.starts_with('-') {
            subcommand = Some((k, arg.into_owned()));
        }
        k += 1;
    }
    let (Some(path), Some((at, name))) = (config, subcommand) else {
        return Ok(argv);
    };
    let flags = output::config_flags(&path, &name)?;
    let mut merged = argv[..=at].to_vec();
    merged.extend(flags.into_iter().map(OsString::from));
    merged.extend(argv[at + 1..].iter().cloned());
    Ok(merged)
}

fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::InferStatic(a) => commands::infer_static(a),
        Command::InferDynamic(a) => commands::infer_dynamic(a),
        Command::Classify(a) => commands::classify_cmd(a),
        Command::ExpStatic(a) => commands::exp_static(a),
        Command::ExpDynamic(a) => commands::exp_dynamic(a),
        Command::ExpRehab(a) => commands::exp_rehab(a),
        Command::ExpClassify(a) => commands::exp_classify(a),
        Command::BenchRuntime(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // clap's first line names the offending flag; the usage block
            // that follows is noise in scripts.
            let text = e.render().to_string();
            eprintln!(
                "{}",
                text.lines().next().unwrap_or("error: invalid arguments")
            );
            return ExitCode::from(USAGE_EXIT);
        }
    };
    if let Some(path) = &cli.config {
        eprintln!("settings from {}", path.display());
    }
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {} {e}", cli.command.name());
            e.exit_code()
        }
    }
}
