//! `protmeas`: drives the simulation library from the command line.

mod commands;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, ValueEnum};
use protmeas_core::config::ExperimentConfig;
use protmeas_core::output::{self, Table};

#[derive(Parser, Debug)]
#[command(name = "protmeas", version, about = "Protective measurement simulations")]
struct Cli {
    /// TOML experiment file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Directory for artifact files.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Option<commands::Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Text => "txt",
        }
    }

    fn parse(name: &str) -> Result<Self> {
        Format::from_str(name, true).map_err(|_| usage(format!("format must be csv, json or text, got `{name}`")))
    }
}

/// Bad command-line or config input that the core library never saw.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    Usage(message.into()).into()
}

/// What a subcommand produced.
pub struct Report {
    pub name: &'static str,
    pub table: Table,
    /// Body of the JSON artifact.
    pub json: serde_json::Value,
    /// Lines appended to text output.
    pub notes: Vec<String>,
    /// Formats always written under `--out`, besides the selected one.
    pub always: Vec<Format>,
    /// Whether the command's own checks passed.
    pub passed: bool,
}

impl Report {
    fn render(&self, format: Format) -> Result<String> {
        Ok(match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => output::to_json(self.name, &self.json)?,
            Format::Text => {
                let mut s = self.table.to_text();
                for n in &self.notes {
                    s.push_str(n);
                    s.push('\n');
                }
                s
            }
        })
    }
}

/// Shared state handed to every subcommand.
pub struct Context {
    pub config: ExperimentConfig,
    pub config_dir: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<protmeas_core::Error>() {
            return if e.is_usage() { 2 } else { 1 };
        }
    }
    1
}

fn run(args: Vec<String>) -> Result<bool> {
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            e.print()?;
            if code == 0 {
                return Ok(true);
            }
            return Err(usage("invalid command line"));
        }
    };
    let config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };

    let command = match cli.command {
        Some(c) => c,
        None => {
            // Take the subcommand from the config and parse again so that
            // flags after it still apply.
            let name = config
                .command
                .clone()
                .ok_or_else(|| usage("no subcommand given and the config has no `command`"))?;
            let mut again = vec![args[0].clone(), name.clone()];
            again.extend(args[1..].iter().cloned());
            match Cli::try_parse_from(&again) {
                Ok(Cli { command: Some(c), .. }) => c,
                _ => return Err(usage(format!("unknown command `{name}` in config"))),
            }
        }
    };

    let format = match (cli.format, &config.format) {
        (Some(f), _) => f,
        (None, Some(name)) => Format::parse(name)?,
        (None, None) => Format::Text,
    };
    let out = cli.out.clone().or_else(|| config.out.clone());
    let ctx = Context {
        config_dir: cli.config.as_deref().and_then(Path::parent).map(Path::to_path_buf),
        config,
    };

    let report = command.run(&ctx)?;
    print!("{}", report.render(format)?);
    if let Some(dir) = out {
        let mut formats = report.always.clone();
        if !formats.contains(&format) {
            formats.push(format);
        }
        for f in formats {
            let name = format!("{}.{}", report.name, f.extension());
            output::write_artifact(&dir, &name, &report.render(f)?)
                .with_context(|| format!("writing {}", dir.join(&name).display()))?;
            eprintln!("wrote {}", dir.join(&name).display());
        }
    }
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
