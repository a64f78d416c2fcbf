//! `rrforensics` command-line front end.
//!
//! Each subcommand reads center CSV (a path or standard input), writes a
//! [`ReportEnvelope`] as `<command>.report.json` and, where the analysis has
//! one, plot data as `<command>.plot.csv` into the `--out` directory. Without
//! `--out` the report is printed to standard output instead.

mod args;
mod commands;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::Path;

use clap::Parser;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_UNDEFINED: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Analysis(#[from] recall_forensics::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Analysis(e) if e.is_undefined() => EXIT_UNDEFINED,
            CliError::Analysis(e) if e.is_validation() => EXIT_VALIDATION,
            // Out-of-range parameter values.
            CliError::Analysis(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_VALIDATION,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub parameters: serde_json::Value,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
}

/// What a subcommand produced, before it is written anywhere.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
    /// Extra files for the output directory, by file name.
    pub artifacts: Vec<(String, String)>,
    /// Printed instead of the report when there is no output directory.
    pub stdout: Option<String>,
}

impl Outcome {
    pub fn new(results: impl Serialize) -> Self {
        Self { results: to_json(&results), ..Default::default() }
    }

    pub fn artifact(mut self, name: impl Into<String>, contents: String) -> Self {
        self.artifacts.push((name.into(), contents));
        self
    }

    pub fn warn(mut self, warnings: impl IntoIterator<Item = String>) -> Self {
        self.warnings.extend(warnings);
        self
    }
}

pub(crate) fn to_json(v: &impl Serialize) -> serde_json::Value {
    serde_json::to_value(v).expect("report payloads serialize to JSON")
}

/// Reads command inputs and records their digests.
pub(crate) struct Inputs<'a> {
    stdin: Option<&'a mut dyn Read>,
    pub digests: Vec<InputDigest>,
}

impl<'a> Inputs<'a> {
    fn new(stdin: &'a mut dyn Read) -> Self {
        Self { stdin: Some(stdin), digests: Vec::new() }
    }

    /// File contents, or standard input for `None` and `-`.
    pub fn read(&mut self, path: Option<&Path>) -> Result<Vec<u8>, CliError> {
        let (label, bytes) = match path {
            Some(p) if p != Path::new("-") => (p.display().to_string(), std::fs::read(p).map_err(io_error(p))?),
            _ => {
                let stdin =
                    self.stdin.take().ok_or_else(|| CliError::Usage("standard input can only be read once".into()))?;
                let mut buf = Vec::new();
                stdin.read_to_end(&mut buf).map_err(io_error(Path::new("-")))?;
                ("-".to_string(), buf)
            }
        };
        let sha256 = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.digests.push(InputDigest { path: label, sha256 });
        Ok(bytes)
    }

    pub fn dataset(&mut self, path: Option<&Path>) -> Result<recall_forensics::Dataset, CliError> {
        let bytes = self.read(path)?;
        let label = self.digests.last().map(|d| d.path.clone()).unwrap_or_default();
        Ok(recall_forensics::ingest::read_centers(&bytes[..], None, label)?)
    }
}

/// Runs the tool against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
}

/// Parses `argv` (program name first), executes the subcommand and returns
/// the exit code.
pub fn run_with<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(&cli.command, stdin, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: &Command, stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut inputs = Inputs::new(stdin);
    let outcome = commands::dispatch(cmd, &mut inputs)?;
    let envelope = ReportEnvelope {
        command: cmd.name().to_string(),
        inputs: inputs.digests,
        parameters: to_json(cmd),
        results: outcome.results,
        warnings: outcome.warnings,
    };
    let mut report = serde_json::to_string_pretty(&envelope).expect("report serializes");
    report.push('\n');
    let stdout_err = io_error(Path::new("<stdout>"));
    match cmd.out_dir() {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_error(dir))?;
            let name = format!("{}.report.json", cmd.name());
            for (file, contents) in std::iter::once((name, report)).chain(outcome.artifacts) {
                let path = dir.join(file);
                std::fs::write(&path, contents).map_err(io_error(&path))?;
            }
            Ok(())
        }
        None => stdout.write_all(outcome.stdout.unwrap_or(report).as_bytes()).map_err(stdout_err),
    }
}
