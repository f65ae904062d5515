//! Command-line front end: each subcommand writes one data file, CSV or
//! JSON, headed by the metadata needed to reproduce it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, Command};

pub mod commands;
pub mod output;
pub mod params;
pub mod verify;

use output::{Format, Metadata};
use params::Params;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Verify(_) => EXIT_VERIFY,
        }
    }
}

impl From<miswire_core::Error> for CliError {
    fn from(e: miswire_core::Error) -> Self {
        use miswire_core::Error as E;
        match e {
            E::OutOfRange { .. } | E::InvalidDistribution(_) | E::InvalidGraph(_) | E::InvalidConfig(_) => {
                CliError::Usage(e.to_string())
            }
            E::NonFinite { .. } | E::NotConverged { .. } | E::UnstableFixedPoint { .. } | E::BudgetExceeded { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

pub fn command() -> Command {
    let mut cmd = Command::new("miswire")
        .version(output::VERSION)
        .about("Density evolution and finite-length simulation of LDPC decoders with missing wires")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in params::COMMANDS {
        let mut sub = Command::new(name).about(about).arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("key = value file; flags override it"),
        );
        for k in params::keys(name) {
            let help = match k.default {
                Some(d) => format!("{} [default: {d}]", k.help),
                None => k.help.to_string(),
            };
            sub = sub.arg(Arg::new(k.name).long(k.name).value_name("VALUE").action(ArgAction::Set).help(help));
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Parses arguments into resolved parameters.
pub fn parse_args<I, T>(args: I) -> Result<Params, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = command().try_get_matches_from(args)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let mut flags = BTreeMap::new();
    for k in params::keys(name) {
        if sub.value_source(k.name) == Some(ValueSource::CommandLine) {
            if let Some(v) = sub.get_one::<String>(k.name) {
                flags.insert(k.name.to_string(), v.clone());
            }
        }
    }
    let file = match sub.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                command().error(clap::error::ErrorKind::Io, format!("cannot read config `{path}`: {e}"))
            })?;
            params::parse_config(&text)
                .map_err(|e| command().error(clap::error::ErrorKind::ValueValidation, e.to_string()))?
        }
        None => BTreeMap::new(),
    };
    Params::resolve(name, file, flags).map_err(|e| command().error(clap::error::ErrorKind::UnknownArgument, e.to_string()))
}

/// Runs one resolved invocation and returns the rendered file.
pub fn execute(p: &Params) -> Result<(String, bool), CliError> {
    let format: Format = p.parse("format")?;
    let workers: Option<usize> = p.parse_opt("workers")?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::Usage("`--workers` must be at least 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::Io(e.to_string()))?;
    let table = pool.install(|| commands::run(p))?;
    let passed = p.command != "verify" || table.rows.iter().all(|r| r[1] == output::Cell::Bool(true));
    let meta = Metadata {
        command: p.command.clone(),
        version: output::VERSION.to_string(),
        seed: p.seed()?,
        params: p.recorded(),
    };
    Ok((output::render(&meta, &table, format)?, passed))
}

/// Full entry point; returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let p = match parse_args(args) {
        Ok(p) => p,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = execute(&p).and_then(|(text, passed)| {
        match p.get("output") {
            Some(path) => std::fs::write(path, &text).map_err(|e| CliError::Io(format!("{path}: {e}")))?,
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?,
        }
        if passed {
            Ok(())
        } else {
            Err(CliError::Verify("see the report for failing checks".into()))
        }
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
