mod args;
mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde_json::{Map, Value};

use args::{AnalyzeCommand, Cli, Command};
use error::CliError;

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(matches: &ArgMatches) -> Result<(), CliError> {
    let cli = Cli::from_arg_matches(matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let config = cli.config.as_deref().map(config::load).transpose()?;
    let config = config.as_ref();
    let (_, sub) = matches
        .subcommand()
        .ok_or_else(|| CliError::Usage("no subcommand given".into()))?;

    match cli.command {
        Command::Synth(a) => commands::synth(&resolve(a, sub, config, "synth")?),
        Command::Ingest(a) => commands::ingest(&resolve(a, sub, config, "ingest")?),
        Command::Pairwise(a) => commands::pairwise(&resolve(a, sub, config, "pairwise")?),
        Command::Select(a) => commands::select(&resolve(a, sub, config, "select")?),
        Command::Netspec(a) => commands::netspec(&resolve(a, sub, config, "netspec")?),
        Command::Search(a) => commands::search(&resolve(a, sub, config, "search")?),
        Command::Report(a) => commands::report(&resolve(a, sub, config, "report")?),
        Command::Analyze(which) => {
            let (_, leaf) = sub
                .subcommand()
                .ok_or_else(|| CliError::Usage("analyze needs a subcommand".into()))?;
            match which {
                AnalyzeCommand::Correlate(a) => {
                    commands::correlate(&resolve(a, leaf, config, "analyze correlate")?)
                }
                AnalyzeCommand::Distance(a) => {
                    commands::distance(&resolve(a, leaf, config, "analyze distance")?)
                }
                AnalyzeCommand::Speedup(a) => {
                    commands::speedup_cmd(&resolve(a, leaf, config, "analyze speedup")?)
                }
            }
        }
    }
}

fn resolve<T>(
    args: T,
    matches: &ArgMatches,
    config: Option<&Map<String, Value>>,
    command: &str,
) -> Result<T, CliError>
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    config::overlay(args, matches, config, command)
}
