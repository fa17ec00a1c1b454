mod args;
mod error;
mod output;
mod plots;
mod run;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::{Deserialize, Serialize};

use args::{Cli, Command, DEFAULT_OUT};
use error::CliError;
use output::Outputs;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    workers: Option<usize>,
    run: Command,
}

/// Overlay the keys of a TOML file on the command's flag values.
fn apply_config(cmd: &Command, path: &Path) -> Result<Command, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let overlay: toml::Table =
        text.parse().map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))?;
    let known = match serde_json::to_value(cmd) {
        Ok(serde_json::Value::Object(m)) => m,
        _ => return Err(CliError::Config("command is not representable as a table".into())),
    };
    let mut base = toml::Table::try_from(cmd).map_err(|e| CliError::Config(e.to_string()))?;
    for (k, v) in overlay {
        if k == "command" {
            if v.as_str() != Some(cmd.name()) {
                return Err(CliError::Config(format!(
                    "{}: key `command` = {v} does not match subcommand `{}`",
                    path.display(),
                    cmd.name()
                )));
            }
            continue;
        }
        if !known.contains_key(&k) {
            let mut keys: Vec<&String> = known.keys().filter(|k| *k != "command").collect();
            keys.sort();
            let keys: Vec<&str> = keys.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Config(format!(
                "{}: unknown key `{k}` for `{}` (expected one of: {})",
                path.display(),
                cmd.name(),
                keys.join(", ")
            )));
        }
        base.insert(k, v);
    }
    toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    let (cmd, workers) = match (&cli.manifest, cli.command) {
        (Some(m), None) => {
            let man = load_manifest(m)?;
            (man.run, cli.workers.or(man.workers))
        }
        (Some(_), Some(_)) => return Err(CliError::Config("--manifest replaces the subcommand; give one or the other".into())),
        (None, Some(c)) => (c, cli.workers),
        (None, None) => return Err(CliError::Config("no subcommand given (try --help)".into())),
    };
    let cmd = match &cli.config {
        Some(p) => apply_config(&cmd, p)?,
        None => cmd,
    };
    if let Some(k) = workers {
        if k == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }
    let dir = cli.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut out = Outputs::create(&dir)?;
    let result = run::execute(&cmd, &mut out).and_then(|()| {
        let man = Manifest {
            tool: "wishent".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            workers,
            run: cmd.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&man).map_err(|e| CliError::Config(e.to_string()))?;
        bytes.push(b'\n');
        out.write(&format!("{}.manifest.json", cmd.name()), &bytes)?;
        Ok(())
    });
    if result.is_err() {
        out.discard();
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wishent: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
