//! Command-line front end: configuration, subcommand dispatch and the
//! per-run output directory (`trajectory.csv`, `report.json`,
//! `config.echo.json`).

pub mod config;
pub mod run;

use std::fmt;
use std::process::ExitCode;

use bachflow::Error;

/// Failure classes, one per nonzero exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    Config(String),
    Invariant(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Invariant(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Invariant(m) => write!(f, "invariant violated: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonInvertibleGauge | Error::NotPositiveDefinite(_) | Error::OutsideSlice { .. } | Error::InvalidInput(_) => {
                Failure::Config(e.to_string())
            }
            Error::ConstraintViolation { .. } | Error::MetricDegenerated { .. } => Failure::Invariant(e.to_string()),
            Error::StiffSegment { .. } | Error::TooManySteps(_) | Error::ExtendBaseTrajectory { .. } => {
                Failure::Numerical(e.to_string())
            }
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("output: {e}"))
    }
}

pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match config::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match config::resolve(&cli).and_then(|cfg| run::run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("bachflow: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
