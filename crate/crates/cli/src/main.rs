//! `decoh`: run one experiment from a flat config file and/or `--key value`
//! flags, writing `<command>.csv` and `summary.txt` to the output directory.
//!
//! Exit status is 0 on success, 1 when the computation fails or reports a
//! broken invariant, and 2 for any configuration problem (in which case
//! nothing is written).

mod commands;
mod config;
mod error;
mod keys;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{value_parser, Arg, ArgAction, ArgMatches};

use crate::config::Config;
use crate::error::CliError;
use crate::keys::Command;

const VERSION: &str = env!("DECOH_VERSION");

fn cli() -> clap::Command {
    let mut app = clap::Command::new("decoh")
        .version(VERSION)
        .about("Numerical experiments on quantum-classical correspondence")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .after_help(
            "Each subcommand reads an optional flat `key = value` config file; flags override it.\n\
             Exit status: 0 success, 1 numerical failure, 2 configuration error.",
        );
    for cmd in Command::ALL {
        let mut sub = clap::Command::new(cmd.name()).about(cmd.about()).arg(
            Arg::new("config")
                .short('c')
                .long("config")
                .value_name("FILE")
                .value_parser(value_parser!(PathBuf))
                .help("flat key = value config file"),
        );
        for key in keys::keys(cmd) {
            let help = match key.default {
                Some(d) => format!("{} [default: {d}]", key.help),
                None => key.help.to_string(),
            };
            sub = sub.arg(
                Arg::new(key.name)
                    .long(key.name)
                    .value_name(key.kind.value_name())
                    .allow_hyphen_values(true)
                    .action(ArgAction::Append)
                    .help(help),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

fn flag_values(command: Command, matches: &ArgMatches) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for key in keys::keys(command) {
        if let Some(values) = matches.get_many::<String>(key.name) {
            let values: Vec<&String> = values.collect();
            if values.len() > 1 {
                eprintln!("warning: --{} given {} times; the last value wins", key.name, values.len());
            }
            out.push((key.name.to_string(), values[values.len() - 1].clone()));
        }
    }
    out
}

fn run(matches: &ArgMatches) -> Result<i32, CliError> {
    let (name, sub) = matches.subcommand().expect("a subcommand is required");
    let command = Command::from_name(name).expect("subcommands come from the key table");

    let file = match sub.get_one::<PathBuf>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
                path: path.clone(),
                source,
            })?;
            config::parse_text(&text, &path.display().to_string())?
        }
        None => Vec::new(),
    };
    let flags = flag_values(command, sub);
    let (cfg, warnings) = Config::resolve(command, &file, &flags, std::env::var(keys::OUTPUT_DIR_ENV).ok())?;
    for w in warnings {
        eprintln!("warning: {w}");
    }

    let job = commands::plan(&cfg)?;
    output::probe(&cfg.output_dir)?;

    let start = Instant::now();
    let result = commands::execute(job);
    let elapsed = start.elapsed().as_secs_f64();

    let (exit, csv, results, error) = match result {
        Ok(outcome) => {
            let exit = if outcome.violations.is_empty() { 0 } else { 1 };
            for v in &outcome.violations {
                eprintln!("invariant violated: {v}");
            }
            let error = (!outcome.violations.is_empty()).then(|| outcome.violations.join("; "));
            (exit, Some(outcome.csv), outcome.results, error)
        }
        Err(e) if e.exit_code() == 1 => {
            eprintln!("error: {e}");
            (1, None, Vec::new(), Some(e.to_string()))
        }
        Err(e) => return Err(e),
    };

    let mut summary = vec![
        ("command".to_string(), command.name().to_string()),
        ("seed".to_string(), cfg.seed().to_string()),
        ("exit_intent".to_string(), exit.to_string()),
        ("version".to_string(), VERSION.to_string()),
    ];
    summary.extend(cfg.summary_pairs());
    summary.extend(results);
    if let Some(e) = error {
        summary.push(("error".to_string(), e.replace('\n', " ")));
    }
    summary.push(("wall_time_s".to_string(), format!("{elapsed:.6}")));

    let mut files = Vec::new();
    if let Some(csv) = csv {
        files.push((format!("{}.csv", command.name()), csv.render()));
    }
    files.push(("summary.txt".to_string(), output::summary_text(&summary)));
    output::write_all(&cfg.output_dir, &files)?;
    Ok(exit)
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let code = match run(&matches) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }

    #[test]
    fn every_subcommand_accepts_its_keys() {
        for cmd in Command::ALL {
            let mut argv = vec!["decoh".to_string(), cmd.name().to_string()];
            for key in keys::keys(cmd) {
                argv.push(format!("--{}", key.name));
                argv.push("1".to_string());
            }
            let m = cli().try_get_matches_from(argv).unwrap();
            let (_, sub) = m.subcommand().unwrap();
            assert_eq!(flag_values(cmd, sub).len(), keys::keys(cmd).len());
        }
    }

    #[test]
    fn negative_values_are_not_flags() {
        let m = cli()
            .try_get_matches_from(["decoh", "transitions", "--mode", "-3", "--tau", "-1e-3"])
            .unwrap();
        let (_, sub) = m.subcommand().unwrap();
        let flags = flag_values(Command::Transitions, sub);
        assert!(flags.contains(&("mode".to_string(), "-3".to_string())));
        assert!(flags.contains(&("tau".to_string(), "-1e-3".to_string())));
    }
}
